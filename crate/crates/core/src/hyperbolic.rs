//! Hyperbolic volumes of ideal tetrahedra over plane triangles, the
//! prepotential of a triangulation, and its finite-difference Hessian.
//!
//! The Lobachevsky-Milnor function is evaluated through the Clausen
//! function `Cl2` with the logarithmic endpoint singularity split off, which
//! is uniformly accurate to ~1e-15 on [0, pi].  The Bloch-Wigner function is
//! computed from three Lobachevsky values (the ideal-tetrahedron angle
//! decomposition); a dilogarithm-series route is kept as an independent
//! cross-check.

use crate::error::{Error, Result};
use crate::geometry::FaceGeom;
use crate::mesh::{Convention, FaceId, FaceKind, PointConfig, Triangulation, VertexId};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// zeta(2k) for k = 1..=N_ZETA, by Euler-Maclaurin summation.
fn zeta_even() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        const N_ZETA: usize = 32;
        let mut out = Vec::with_capacity(N_ZETA);
        for k in 1..=N_ZETA {
            let s = (2 * k) as f64;
            let m = 64.0_f64;
            let mut sum = 0.0;
            let mut n = 1.0;
            while n < m {
                sum += n.powf(-s);
                n += 1.0;
            }
            // Tail by Euler-Maclaurin up to the B4 term.
            sum += m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s) + s * m.powf(-s - 1.0) / 12.0
                - s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
            out.push(sum);
        }
        out
    })
}

/// Clausen function `Cl2(theta) = -int_0^theta log|2 sin(t/2)| dt` on
/// [0, pi].
fn clausen(theta: f64) -> f64 {
    debug_assert!((0.0..=PI + 1e-9).contains(&theta));
    if theta == 0.0 {
        return 0.0;
    }
    let zeta = zeta_even();
    let r = (theta / (2.0 * PI)).powi(2);
    let mut series = 0.0;
    let mut rk = r;
    for (i, &z) in zeta.iter().enumerate() {
        let k = (i + 1) as f64;
        let term = z / (k * (2.0 * k + 1.0)) * rk;
        series += term;
        if term < 1e-18 * series.max(1.0) {
            break;
        }
        rk *= r;
    }
    theta * (1.0 - theta.ln() + series)
}

/// Lobachevsky-Milnor function, `-int_0^alpha log(2 sin t) dt`; odd and
/// pi-periodic, accurate to ~1e-14 absolute.
pub fn lobachevsky(alpha: f64) -> f64 {
    // Reduce modulo pi into [-pi/2, pi/2].
    let mut a = alpha % PI;
    if a > PI / 2.0 {
        a -= PI;
    } else if a < -PI / 2.0 {
        a += PI;
    }
    let v = clausen(2.0 * a.abs()) / 2.0;
    if a < 0.0 {
        -v
    } else {
        v
    }
}

/// Derivative of the Lobachevsky function, `-log(2 sin alpha)`.
pub fn lobachevsky_deriv(alpha: f64) -> f64 {
    -(2.0 * alpha.sin().abs()).ln()
}

/// Volume of the regular ideal tetrahedron, `3 L(pi/3)`; the maximum of
/// both the face volume and the Bloch-Wigner function.
pub fn max_tetrahedron_volume() -> f64 {
    3.0 * lobachevsky(PI / 3.0)
}

// ---------------------------------------------------------------------------
// Dilogarithm cross-check route.
// ---------------------------------------------------------------------------

/// Coefficients `B_n / (n+1)!` of the expansion of `Li2` in powers of
/// `u = -ln(1 - z)`.
fn dilog_coeffs() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        use num_rational::BigRational;
        use num_traits::{One, Zero};
        const M: usize = 40;
        // Bernoulli numbers by the defining recurrence.
        let mut b: Vec<BigRational> = Vec::with_capacity(M + 1);
        for n in 0..=M {
            if n == 0 {
                b.push(BigRational::one());
                continue;
            }
            // sum_{j<n} C(n+1, j) B_j = 0
            let mut acc = BigRational::zero();
            let mut binom = num_bigint::BigInt::from(1);
            for (j, bj) in b.iter().enumerate() {
                // binom = C(n+1, j)
                acc += BigRational::from_integer(binom.clone()) * bj;
                binom = binom * (n + 1 - j) / (j + 1);
            }
            let c_n = BigRational::from_integer(num_bigint::BigInt::from((n + 1) as i64));
            b.push(-acc / c_n);
        }
        let mut fact = 1.0;
        b.iter()
            .enumerate()
            .map(|(n, bn)| {
                fact *= (n + 1) as f64;
                crate::linalg::rat_to_f64(bn) / fact
            })
            .collect()
    })
}

/// Principal-branch complex dilogarithm `Li2(z) = sum z^k / k^2`.
pub fn dilog(z: Complex64) -> Complex64 {
    let pi2_6 = PI * PI / 6.0;
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    if z == Complex64::new(1.0, 0.0) {
        return Complex64::new(pi2_6, 0.0);
    }
    if z.norm() > 1.0 {
        // Li2(z) = -Li2(1/z) - pi^2/6 - ln(-z)^2 / 2
        let l = (-z).ln();
        return -dilog(1.0 / z) - pi2_6 - l * l / 2.0;
    }
    if z.re > 0.5 {
        // Li2(z) = pi^2/6 - ln(z) ln(1-z) - Li2(1-z)
        let one = Complex64::new(1.0, 0.0);
        return pi2_6 - z.ln() * (one - z).ln() - dilog(one - z);
    }
    // |z| <= 1, Re z <= 1/2: expansion in u = -ln(1-z), |u| < 2 pi.
    let u = -(Complex64::new(1.0, 0.0) - z).ln();
    let coeffs = dilog_coeffs();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut up = u;
    for &c in coeffs {
        if c != 0.0 {
            sum += c * up;
        }
        up *= u;
        if up.norm() * 1e-3 < 1e-18 * sum.norm().max(1.0) {
            break;
        }
    }
    sum
}

/// Bloch-Wigner function via the ideal-tetrahedron angle decomposition,
/// `Im(Li2(z)) + ln|z| Arg(1 - z)`.
pub fn bloch_wigner(z: Complex64) -> Result<f64> {
    if !z.is_finite() || z == Complex64::new(0.0, 0.0) || z == Complex64::new(1.0, 0.0) {
        return Err(Error::SingularArgument(z));
    }
    if z.im == 0.0 {
        return Ok(0.0);
    }
    let (w, sign) = if z.im > 0.0 { (z, 1.0) } else { (z.conj(), -1.0) };
    let one = Complex64::new(1.0, 0.0);
    // Dihedral angles of the ideal tetrahedron (0, 1, w, infinity).
    let a0 = w.arg();
    let a1 = (one / (one - w)).arg();
    let a2 = ((w - one) / w).arg();
    Ok(sign * (lobachevsky(a0) + lobachevsky(a1) + lobachevsky(a2)))
}

/// Bloch-Wigner through the dilogarithm series; independent cross-check of
/// `bloch_wigner`.
pub fn bloch_wigner_dilog(z: Complex64) -> Result<f64> {
    if !z.is_finite() || z == Complex64::new(0.0, 0.0) || z == Complex64::new(1.0, 0.0) {
        return Err(Error::SingularArgument(z));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok(dilog(z).im + z.norm().ln() * (one - z).arg())
}

// ---------------------------------------------------------------------------
// Face volumes and the prepotential.
// ---------------------------------------------------------------------------

/// Hyperbolic volume of the ideal tetrahedron over a face, from its angles.
pub fn face_volume(g: &FaceGeom) -> f64 {
    g.angles.iter().map(|&a| lobachevsky(a)).sum()
}

/// The same volume from the cross-ratio `z = (z3 - z1) / (z2 - z1)` through
/// the dilogarithm; agrees with `face_volume` to ~1e-12.
pub fn face_volume_crossratio(z1: Complex64, z2: Complex64, z3: Complex64) -> Result<f64> {
    bloch_wigner_dilog((z3 - z1) / (z2 - z1))
}

/// Prepotential of a triangulation: minus the sum of face volumes, with the
/// convention-specific treatment of the unbounded region.
#[derive(Debug, Clone)]
pub struct Prepotential {
    pub value: f64,
    pub convention: Convention,
    /// Interior-face volumes (and the outer face's, where present), positive
    /// for every non-degenerate face.
    pub per_face: Vec<(FaceId, f64)>,
}

/// Computes the prepotential.  Infinity convention: faces at infinity have
/// zero volume and are skipped.  Fixed-face convention: the outer face is
/// clockwise and enters with the opposite sign.
pub fn prepotential(t: &Triangulation) -> Result<Prepotential> {
    let mut per_face = Vec::new();
    let mut value = 0.0;
    for (f, face) in t.faces().iter().enumerate() {
        match face.kind {
            FaceKind::Infinite => {}
            FaceKind::Interior => {
                let vol = face_volume(t.face_geometry(f)?);
                per_face.push((f, vol));
                value -= vol;
            }
            FaceKind::Outer => {
                let vol = face_volume(t.face_geometry(f)?);
                per_face.push((f, vol));
                value += vol;
            }
        }
    }
    Ok(Prepotential {
        value,
        convention: t.config().convention(),
        per_face,
    })
}

// ---------------------------------------------------------------------------
// Finite-difference Hessian of the prepotential.
// ---------------------------------------------------------------------------

/// Central-difference estimate of `d^2 A / d z_u d z-bar_v`.
///
/// Uses a 4-point real stencil (+-h along each axis) per variable.  Every
/// stencil configuration is rebuilt and must keep the combinatorics of the
/// base triangulation, else `FlipInsideStencil`.  Only faces incident to `u`
/// or `v` contribute to the differences, so they alone are summed.
pub fn hessian_fd(
    config: &PointConfig,
    u: VertexId,
    v: VertexId,
    h: f64,
) -> Result<Complex64> {
    if config.fixed().contains(&u) || config.fixed().contains(&v) {
        return Err(Error::InvalidInput("hessian_fd expects free vertices".into()));
    }
    let base = Triangulation::build(config)?;
    let signature = base.edge_signature();
    // The outer face's vertices are fixed, so only interior faces incident
    // to u or v contribute to the differences.
    let local_faces: Vec<[VertexId; 3]> = base
        .faces()
        .iter()
        .filter(|f| f.kind == FaceKind::Interior && (f.v.contains(&u) || f.v.contains(&v)))
        .map(|f| f.v)
        .collect();

    let eval = |du: Complex64, dv: Complex64| -> Result<f64> {
        let mut cfg = config.clone();
        cfg = cfg.with_point(u, cfg.point(u) + du);
        cfg = cfg.with_point(v, cfg.point(v) + dv);
        let t = Triangulation::build(&cfg)?;
        if t.edge_signature() != signature {
            return Err(Error::FlipInsideStencil(h));
        }
        let mut a = 0.0;
        for vs in &local_faces {
            let g = FaceGeom::new(
                cfg.point(vs[0]),
                cfg.point(vs[1]),
                cfg.point(vs[2]),
                base.scale(),
            )?;
            a -= face_volume(&g);
        }
        Ok(a)
    };

    let re = Complex64::new(h, 0.0);
    let im = Complex64::new(0.0, h);
    if u == v {
        let f0 = eval(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))?;
        let axx = (eval(re, re)? - 2.0 * f0 + eval(-re, -re)?) / (h * h);
        let ayy = (eval(im, im)? - 2.0 * f0 + eval(-im, -im)?) / (h * h);
        return Ok(Complex64::new((axx + ayy) / 4.0, 0.0));
    }
    let mixed = |du: Complex64, dv: Complex64| -> Result<f64> {
        Ok(
            (eval(du, dv)? - eval(du, -dv)? - eval(-du, dv)? + eval(-du, -dv)?)
                / (4.0 * h * h),
        )
    };
    let axx = mixed(re, re)?;
    let ayy = mixed(im, im)?;
    let axy = mixed(re, im)?;
    let ayx = mixed(im, re)?;
    Ok(Complex64::new((axx + ayy) / 4.0, (axy - ayx) / 4.0))
}

/// Suggested finite-difference step for vertex `u`: a fraction of the mean
/// incident edge length.
pub fn fd_step(t: &Triangulation, u: VertexId, fraction: f64) -> f64 {
    let cfg = t.config();
    let star = t.vertex_star(u);
    let mut total = 0.0;
    let mut count = 0;
    for &e in star {
        let [a, b] = t.edges()[e].v;
        if cfg.is_infinite(a) || cfg.is_infinite(b) {
            continue;
        }
        total += (cfg.point(a) - cfg.point(b)).norm();
        count += 1;
    }
    fraction * total / count.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    /// Quadrature oracle for the Lobachevsky function: the endpoint log is
    /// integrated exactly, the smooth remainder by Gauss-Legendre.
    pub fn lobachevsky_quadrature(alpha: f64) -> f64 {
        assert!((0.0..=PI / 2.0 + 1e-12).contains(&alpha));
        if alpha == 0.0 {
            return 0.0;
        }
        // -int_0^a ln(2 sin t) dt = -[a ln(2a) - a] - int_0^a ln(sin t / t) dt
        let smooth = gauss_legendre_64(0.0, alpha, |t| {
            if t.abs() < 1e-18 {
                0.0
            } else {
                (t.sin() / t).ln()
            }
        });
        -(alpha * (2.0 * alpha).ln() - alpha) - smooth
    }

    fn gauss_legendre_64(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        // 64-point rule on [a, b] by composite 16-point Gauss on 4 panels.
        const X: [f64; 8] = [
            0.09501250983763744,
            0.28160355077925891,
            0.45801677765722739,
            0.61787624440264375,
            0.75540440835500303,
            0.86563120238783174,
            0.94457502307323258,
            0.98940093499164993,
        ];
        const W: [f64; 8] = [
            0.18945061045506850,
            0.18260341504492359,
            0.16915651939500254,
            0.14959598881657673,
            0.12462897125553387,
            0.09515851168249278,
            0.06225352393864789,
            0.02715245941175409,
        ];
        let mut total = 0.0;
        let panels = 4;
        for p in 0..panels {
            let pa = a + (b - a) * p as f64 / panels as f64;
            let pb = a + (b - a) * (p + 1) as f64 / panels as f64;
            let c = (pa + pb) / 2.0;
            let hw = (pb - pa) / 2.0;
            for k in 0..8 {
                total += W[k] * hw * (f(c + hw * X[k]) + f(c - hw * X[k]));
            }
        }
        total
    }

    #[test]
    fn lobachevsky_special_values() {
        assert_eq!(lobachevsky(0.0), 0.0);
        // Oddness plus pi-periodicity force L(pi/2) = 0.
        assert!(lobachevsky(PI / 2.0).abs() < 1e-15);
        // Regular ideal tetrahedron volume.
        assert_relative_eq!(
            3.0 * lobachevsky(PI / 3.0),
            1.0149416064,
            epsilon = 1e-9
        );
    }

    #[test]
    fn lobachevsky_matches_quadrature() {
        for &a in &[0.1, 0.3, PI / 6.0, PI / 4.0, PI / 3.0, 1.2, PI / 2.0] {
            let series = lobachevsky(a);
            let quad = lobachevsky_quadrature(a);
            assert!(
                (series - quad).abs() < 1e-13,
                "alpha = {a}: series {series} vs quadrature {quad}"
            );
        }
    }

    proptest! {
        #[test]
        fn lobachevsky_odd_and_periodic(a in -10.0f64..10.0) {
            let v = lobachevsky(a);
            prop_assert!((lobachevsky(-a) + v).abs() < 1e-13);
            prop_assert!((lobachevsky(a + PI) - v).abs() < 1e-13);
        }

        #[test]
        fn bloch_wigner_odd_under_conjugation(re in -3.0f64..3.0, im in 0.01f64..3.0) {
            let z = Complex64::new(re, im);
            let v = bloch_wigner(z).unwrap();
            let w = bloch_wigner(z.conj()).unwrap();
            prop_assert!((v + w).abs() < 1e-12);
        }
    }

    #[test]
    fn dilog_special_values() {
        let pi2 = PI * PI;
        assert_relative_eq!(dilog(Complex64::new(1.0, 0.0)).re, pi2 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(dilog(Complex64::new(-1.0, 0.0)).re, -pi2 / 12.0, epsilon = 1e-14);
        let half = dilog(Complex64::new(0.5, 0.0)).re;
        assert_relative_eq!(
            half,
            pi2 / 12.0 - 0.5 * 2f64.ln().powi(2),
            epsilon = 1e-14
        );
    }

    #[test]
    fn bloch_wigner_routes_agree() {
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let z = Complex64::new(next() * 6.0 - 3.0, next() * 6.0 - 3.0);
            if z.im.abs() < 1e-3 || (z - 1.0).norm() < 1e-3 || z.norm() < 1e-3 {
                continue;
            }
            let a = bloch_wigner(z).unwrap();
            let b = bloch_wigner_dilog(z).unwrap();
            assert!((a - b).abs() < 1e-12, "z = {z}: {a} vs {b}");
        }
    }

    #[test]
    fn bloch_wigner_max_at_hexagonal_point() {
        let z = Complex64::from_polar(1.0, PI / 3.0);
        assert_relative_eq!(
            bloch_wigner(z).unwrap(),
            max_tetrahedron_volume(),
            epsilon = 1e-12
        );
        assert_relative_eq!(max_tetrahedron_volume(), 1.0149416064, epsilon = 1e-9);
    }

    #[test]
    fn bloch_wigner_real_is_zero_and_singularities_error() {
        assert_eq!(bloch_wigner(Complex64::new(0.37, 0.0)).unwrap(), 0.0);
        assert!(bloch_wigner(Complex64::new(0.0, 0.0)).is_err());
        assert!(bloch_wigner(Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn face_volume_examples() {
        // (0, 1, i): angles pi/2, pi/4, pi/4 and L(pi/2) = 0.
        let g = crate::geometry::FaceGeom::new(
            Complex64::new(0., 0.),
            Complex64::new(1., 0.),
            Complex64::new(0., 1.),
            1.0,
        )
        .unwrap();
        assert_relative_eq!(
            face_volume(&g),
            2.0 * lobachevsky(PI / 4.0),
            epsilon = 1e-13
        );
        let by_crossratio = face_volume_crossratio(
            Complex64::new(0., 0.),
            Complex64::new(1., 0.),
            Complex64::new(0., 1.),
        )
        .unwrap();
        assert_relative_eq!(face_volume(&g), by_crossratio, epsilon = 1e-12);
    }

    #[test]
    fn volume_variation_formula() {
        // dVol = -sum d alpha_i ln(sin alpha_i) for sum d alpha_i = 0.
        let alphas = [0.7, 1.1, PI - 0.7 - 1.1];
        let d = [1e-6, -0.4e-6, -0.6e-6];
        let vol = |a: &[f64; 3]| -> f64 { a.iter().map(|&x| lobachevsky(x)).sum() };
        let mut moved = alphas;
        for i in 0..3 {
            moved[i] += d[i];
        }
        let fd = vol(&moved) - vol(&alphas);
        let formula: f64 = -(0..3).map(|i| d[i] * alphas[i].sin().ln()).sum::<f64>();
        assert!((fd - formula).abs() < 1e-6 * 1e-6_f64.max(formula.abs()));
    }
}
