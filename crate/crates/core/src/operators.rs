//! Incidence operators of a triangulation and the Kahler matrix.
//!
//! * `R[v, e] = 1` when vertex `v` bounds edge `e` (integer, exact).
//! * `E[e, e']` is `+1`/`-1` when `e'` follows/precedes `e` in the clockwise
//!   cyclic order of a shared face, `0` otherwise (antisymmetric, exact).
//!   Infinite faces contribute like any other face.
//! * `A[v, e] = 1 / (z_v - z_w)` for `e = (v, w)`; entries touching the
//!   infinity vertex are zero.
//!
//! From these, the angle Jacobian is `J = (i/2) A E` (the actual derivative
//! `d theta_e / d z_v`) and the Kahler matrix is `D = (1/4i) A E A*`, which
//! coincides entrywise with the per-face cotangent assembly including the
//! clockwise outer face.

use crate::error::{Error, Result};
use crate::geometry::FaceGeom;
use crate::linalg::{CMat, IMat, QMat, Rat};
use crate::mesh::{EdgeId, FaceKind, Triangulation, VertexId};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed};

/// The assembled operator family of one triangulation.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub r: IMat,
    pub e: IMat,
    pub a: CMat,
    /// Angle Jacobian `J[v, e] = d theta_e / d z_v`.
    pub j: CMat,
    /// Kahler matrix over all vertices (rows/columns of the infinity vertex
    /// are zero in the infinity convention).
    pub d: CMat,
}

impl OperatorSet {
    pub fn assemble(t: &Triangulation) -> Result<Self> {
        let r = incidence_r(t);
        let e = edge_pair_e(t);
        let a = vertex_edge_a(t);
        let e_c = e.to_cmat();
        let j = a.mul(&e_c).scale(Complex64::new(0.0, 0.5));
        let d = a
            .mul(&e_c)
            .mul(&a.adjoint())
            .scale(Complex64::new(0.0, -0.25)); // 1/(4i) = -i/4
        Ok(OperatorSet { r, e, a, j, d })
    }

    /// `max |(A E A^T)[u, v]|`; exactly zero in exact arithmetic.
    pub fn aeat_residual(&self) -> f64 {
        self.a
            .mul(&self.e.to_cmat())
            .mul(&self.a.transpose())
            .max_abs()
    }
}

/// Vertex-edge incidence matrix, `(N+3) x (3N+3)`.
pub fn incidence_r(t: &Triangulation) -> IMat {
    let mut r = IMat::zeros(t.n_vertices(), t.edges().len());
    for (e, edge) in t.edges().iter().enumerate() {
        r[(edge.v[0], e)] = 1;
        r[(edge.v[1], e)] = 1;
    }
    r
}

/// Edge-edge matrix: for each face, `E[e, e'] = +1` when `e'` is the
/// clockwise-next edge from `e` within the face (equivalently the
/// counterclockwise-previous), `-1` for the reverse pair.
pub fn edge_pair_e(t: &Triangulation) -> IMat {
    let m = t.edges().len();
    let mut e = IMat::zeros(m, m);
    for f in 0..t.faces().len() {
        // face_edge_ids[k] is opposite corner k; the counterclockwise cyclic
        // order of the edges themselves is (v0 v1, v1 v2, v2 v0), i.e.
        // slots 2, 0, 1.
        let ids = t.face_edge_ids(f);
        let cyc = [ids[2], ids[0], ids[1]];
        for k in 0..3 {
            let cur = cyc[k];
            let ccw_next = cyc[(k + 1) % 3];
            e[(cur, ccw_next)] = -1;
            e[(ccw_next, cur)] = 1;
        }
    }
    e
}

/// Inverse-distance incidence matrix `A[v, e] = 1 / (z_v - z_w)`.
pub fn vertex_edge_a(t: &Triangulation) -> CMat {
    let cfg = t.config();
    let mut a = CMat::zeros(t.n_vertices(), t.edges().len());
    for (e, edge) in t.edges().iter().enumerate() {
        let [u, v] = edge.v;
        if cfg.is_infinite(u) || cfg.is_infinite(v) {
            continue;
        }
        let zu = cfg.point(u);
        let zv = cfg.point(v);
        a[(u, e)] = 1.0 / (zu - zv);
        a[(v, e)] = 1.0 / (zv - zu);
    }
    a
}

/// Per-face Kahler block for a counterclockwise triangle:
/// `(1/8R^2) [[cot a2 + cot a3, -cot a3 - i, -cot a2 + i], ...]`.
pub fn kahler_face(g: &FaceGeom) -> [[Complex64; 3]; 3] {
    let s = 1.0 / (8.0 * g.radius * g.radius);
    let cot = [g.cot(0), g.cot(1), g.cot(2)];
    let i = Complex64::new(0.0, 1.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    [
        [
            re(s * (cot[1] + cot[2])),
            s * (re(-cot[2]) - i),
            s * (re(-cot[1]) + i),
        ],
        [
            s * (re(-cot[2]) + i),
            re(s * (cot[2] + cot[0])),
            s * (re(-cot[0]) - i),
        ],
        [
            s * (re(-cot[1]) - i),
            s * (re(-cot[0]) + i),
            re(s * (cot[0] + cot[1])),
        ],
    ]
}

/// Kahler matrix by the face-sum route: interior faces added, the outer
/// face (counterclockwise reversal) subtracted.  Agrees entrywise with
/// `(1/4i) A E A*`.
pub fn kahler_assemble(t: &Triangulation) -> Result<CMat> {
    let n = t.n_vertices();
    let mut d = CMat::zeros(n, n);
    for (f, face) in t.faces().iter().enumerate() {
        match face.kind {
            FaceKind::Infinite => {}
            FaceKind::Interior => {
                scatter_face(&mut d, face.v, t.face_geometry(f)?, 1.0);
            }
            FaceKind::Outer => {
                // Geometry is stored for the reversal (v0, v2, v1).
                let verts = [face.v[0], face.v[2], face.v[1]];
                scatter_face(&mut d, verts, t.face_geometry(f)?, -1.0);
            }
        }
    }
    Ok(d)
}

fn scatter_face(d: &mut CMat, verts: [VertexId; 3], g: &FaceGeom, sign: f64) {
    let block = kahler_face(g);
    for i in 0..3 {
        for j in 0..3 {
            d[(verts[i], verts[j])] += sign * block[i][j];
        }
    }
}

/// Exact basis-dependent operators: the angle-reconstruction matrix `M0`
/// (rational; denominators divide 2), the restriction `E0` of `E` to the
/// basis, and the complement determinant of `R`.
#[derive(Clone, Debug)]
pub struct ExactBasisOps {
    /// `(3N+3) x 2N`; `d theta = M0 d theta_{basis}` on the flat stratum.
    pub m0: QMat,
    /// `2N x 2N` restriction of `E` to basis columns/rows.
    pub e0: IMat,
    pub det_e0: BigInt,
    /// `det over (vertices x complement) of R`; `+-2` for a valid basis.
    pub det_r_complement: BigInt,
}

impl ExactBasisOps {
    pub fn compute(t: &Triangulation, ops: &OperatorSet, basis: &[EdgeId]) -> Result<Self> {
        let n_edges = t.edges().len();
        let n_vertices = t.n_vertices();
        if basis.len() != 2 * t.n_free() {
            return Err(Error::InvalidInput("basis must have 2N edges".into()));
        }
        let complement: Vec<EdgeId> = (0..n_edges).filter(|e| !basis.contains(e)).collect();
        let all: Vec<usize> = (0..n_vertices).collect();
        let r_tilde = ops.r.select(&all, &complement).to_qmat();
        let r0 = ops.r.select(&all, basis).to_qmat();
        let det_r_complement = {
            let d = r_tilde.det();
            debug_assert!(d.is_integer());
            d.to_integer()
        };
        if det_r_complement.abs() != BigInt::from(2) {
            return Err(Error::InvalidInput(format!(
                "complement determinant is {det_r_complement}, not a valid odd-cycle basis"
            )));
        }
        // d theta_complement = -Rtilde^{-1} R0 d theta_basis
        let neg_expr = r_tilde.solve(&r0)?;
        let mut m0 = QMat::zeros(n_edges, basis.len());
        for (j, &e) in basis.iter().enumerate() {
            m0[(e, j)] = Rat::one();
        }
        for (i, &e) in complement.iter().enumerate() {
            for j in 0..basis.len() {
                m0[(e, j)] = -neg_expr[(i, j)].clone();
            }
        }
        let e0 = ops.e.select(basis, basis);
        let det_e0 = e0.det();
        Ok(ExactBasisOps {
            m0,
            e0,
            det_e0,
            det_r_complement,
        })
    }

    /// Exact check of `E = M0 E0 M0^T`.
    pub fn reconstructs_e(&self, e: &IMat) -> bool {
        let lhs = e.to_qmat();
        let rhs = self.m0.mul(&self.e0.to_qmat()).mul(&self.m0.transpose());
        lhs == rhs
    }
}

/// Residual report for the exact and floating operator identities of one
/// triangulation and basis.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub re_zero: bool,
    pub det_e0: BigInt,
    pub det_r_complement: BigInt,
    pub e_reconstructed: bool,
    pub aeat_max: f64,
    pub d_route_max_diff: f64,
    pub d_hermitian_max_diff: f64,
    pub d_min_eigenvalue: f64,
    pub zero_mode_residual: f64,
}

impl IdentityReport {
    pub fn compute(t: &Triangulation, ops: &OperatorSet, basis: &[EdgeId]) -> Result<Self> {
        let exact = ExactBasisOps::compute(t, ops, basis)?;
        let re_zero = ops.r.mul(&ops.e).is_zero();
        let d_face = kahler_assemble(t)?;
        let d_route_max_diff = d_face.sub(&ops.d).max_abs();
        let mut herm = 0.0f64;
        let n = ops.d.rows;
        for i in 0..n {
            for j in 0..n {
                herm = herm.max((ops.d[(i, j)] - ops.d[(j, i)].conj()).norm());
            }
        }
        let eig = crate::linalg::hermitian_eigenvalues(&ops.d);
        Ok(IdentityReport {
            re_zero,
            det_e0: exact.det_e0.clone(),
            det_r_complement: exact.det_r_complement.clone(),
            e_reconstructed: exact.reconstructs_e(&ops.e),
            aeat_max: ops.aeat_residual(),
            d_route_max_diff,
            d_hermitian_max_diff: herm,
            d_min_eigenvalue: eig.first().copied().unwrap_or(0.0),
            zero_mode_residual: zero_mode_residual(t, &ops.d),
        })
    }
}

/// `max_a |psi_a D| / ||D||` for the three conformal zero modes
/// `psi_a = (z_v^{a-1})`, rows applied on the left.  Meaningful in the
/// fixed-face convention where all vertices are finite.
pub fn zero_mode_residual(t: &Triangulation, d: &CMat) -> f64 {
    let cfg = t.config();
    if cfg.infinity().is_some() {
        return f64::NAN;
    }
    let n = t.n_vertices();
    let scale = d.max_abs().max(1e-300);
    let mut worst = 0.0f64;
    for a in 0..3u32 {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for v in 0..n {
                acc += cfg.point(v).powu(a) * d[(v, j)];
            }
            worst = worst.max(acc.norm());
        }
    }
    worst / scale
}

/// Quadratic contraction of one face block:
/// `sum z_i^2 D(f)_{ij} zbar_j^2 = Area(f)`.
///
/// The constant is pinned by the eigen-decomposition of `D(f)`: the vector
/// `(zbar_1^2, zbar_2^2, zbar_3^2)` has eigenvalue
/// `(cot a1 + cot a2 + cot a3)/(4 R^2)`, whose contraction evaluates to the
/// triangle area.
pub fn face_quadratic_identity_residual(g: &FaceGeom, z: [Complex64; 3]) -> f64 {
    let block = kahler_face(g);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc += z[i] * z[i] * block[i][j] * (z[j] * z[j]).conj();
        }
    }
    (acc - Complex64::new(g.area, 0.0)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PointConfig;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tetra() -> Triangulation {
        let cfg = PointConfig::fixed_face(
            vec![c(0., 0.), c(1., 0.), c(0., 1.), c(0.25, 0.25)],
            [0, 1, 2],
        )
        .unwrap();
        Triangulation::build(&cfg).unwrap()
    }

    #[test]
    fn r_row_sums_and_e_sparsity_tetrahedron() {
        let t = tetra();
        let ops = OperatorSet::assemble(&t).unwrap();
        // Every vertex of the tetrahedron bounds 3 edges.
        for v in 0..4 {
            let s: i64 = (0..6).map(|e| ops.r[(v, e)]).sum();
            assert_eq!(s, 3);
        }
        // Each edge has two co-triangle partners in each of its two faces.
        for e in 0..6 {
            let nz = (0..6).filter(|&f| ops.e[(e, f)] != 0).count();
            assert_eq!(nz, 4);
        }
        assert!(ops.e.is_antisymmetric());
    }

    #[test]
    fn re_is_zero_exactly() {
        let t = tetra();
        let ops = OperatorSet::assemble(&t).unwrap();
        assert!(ops.r.mul(&ops.e).is_zero());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let cfg = PointConfig::fixed_face(
            vec![c(0., 0.), c(4., 0.), c(0., 4.), c(1.0, 1.1), c(0.7, 2.0)],
            [0, 1, 2],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let ops = OperatorSet::assemble(&t).unwrap();
        let h = 1e-6;
        for v in t.config().free_vertices() {
            for e in 0..t.edges().len() {
                let fd_re = {
                    let tp =
                        Triangulation::build(&cfg.with_point(v, cfg.point(v) + c(h, 0.))).unwrap();
                    let tm =
                        Triangulation::build(&cfg.with_point(v, cfg.point(v) - c(h, 0.))).unwrap();
                    (tp.edge_theta(e) - tm.edge_theta(e)) / (2.0 * h)
                };
                let fd_im = {
                    let tp =
                        Triangulation::build(&cfg.with_point(v, cfg.point(v) + c(0., h))).unwrap();
                    let tm =
                        Triangulation::build(&cfg.with_point(v, cfg.point(v) - c(0., h))).unwrap();
                    (tp.edge_theta(e) - tm.edge_theta(e)) / (2.0 * h)
                };
                // d theta/dz = (d/dx - i d/dy)/2
                let fd = Complex64::new(fd_re / 2.0, -fd_im / 2.0);
                let j = ops.j[(v, e)];
                assert!(
                    (fd - j).norm() < 1e-6 * (1.0 + j.norm()),
                    "v={v} e={e}: fd {fd} vs J {j}"
                );
            }
        }
    }

    #[test]
    fn jacobian_closed_form_entry() {
        // Edge (0, 1) with apex z3 = i; the lower apex is far away so the
        // triangulation is {0, 1, i, 0.5 - 2i} under the infinity convention.
        // d theta_e / d z_3 = (i/2)(1/(z3 - z2) - 1/(z3 - z1)) = -(1 + i)/4.
        let cfg = PointConfig::with_infinity(
            vec![c(0., 0.), c(1., 0.), c(0., 1.), c(0.5, -2.0)],
            [0, 1],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let ops = OperatorSet::assemble(&t).unwrap();
        let e = t.edge_between(0, 1).unwrap();
        let j = ops.j[(2, e)];
        assert_relative_eq!(j.re, -0.25, epsilon = 1e-13);
        assert_relative_eq!(j.im, -0.25, epsilon = 1e-13);
        // Translation invariance: the four incident entries sum to zero.
        let sum: Complex64 = (0..4).map(|v| ops.j[(v, e)]).sum();
        assert!(sum.norm() < 1e-14);
    }

    #[test]
    fn kahler_face_equilateral() {
        let z = |k: i32| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0);
        let g = FaceGeom::new(z(0), z(1), z(2), 2.0).unwrap();
        let block = kahler_face(&g);
        let s3 = 3f64.sqrt();
        for i in 0..3 {
            assert_relative_eq!(block[i][i].re, 1.0 / (4.0 * s3), epsilon = 1e-13);
            assert_relative_eq!(block[i][i].im, 0.0, epsilon = 1e-13);
        }
        assert_relative_eq!(block[0][1].re, -1.0 / (8.0 * s3), epsilon = 1e-13);
        assert_relative_eq!(block[0][1].im, -1.0 / 8.0, epsilon = 1e-13);
    }

    #[test]
    fn kahler_face_annihilates_constant_and_zbar() {
        let z = [c(0.2, 0.1), c(1.7, -0.3), c(0.8, 1.9)];
        let g = FaceGeom::new(z[0], z[1], z[2], 2.0).unwrap();
        let block = kahler_face(&g);
        for i in 0..3 {
            let ones: Complex64 = (0..3).map(|j| block[i][j]).sum();
            let zbar: Complex64 = (0..3).map(|j| block[i][j] * z[j].conj()).sum();
            assert!(ones.norm() < 1e-12);
            assert!(zbar.norm() < 1e-12);
        }
        // Nontrivial eigenvalue (cot a1 + cot a2 + cot a3)/(4 R^2) > 0.
        let lam = (g.cot(0) + g.cot(1) + g.cot(2)) / (4.0 * g.radius * g.radius);
        assert!(lam > 0.0);
        // Quadratic contraction gives half the area.
        assert!(face_quadratic_identity_residual(&g, z) < 1e-12);
    }

    #[test]
    fn kahler_routes_agree_and_d_is_psd() {
        let t = tetra();
        let ops = OperatorSet::assemble(&t).unwrap();
        let d_face = kahler_assemble(&t).unwrap();
        assert!(d_face.sub(&ops.d).max_abs() < 1e-12);
        // Hermitian, PSD with three conformal zero modes.
        let eig = crate::linalg::hermitian_eigenvalues(&ops.d);
        assert!(eig[0] > -1e-12);
        assert!(eig[2] < 1e-12, "three zero modes expected, got {eig:?}");
        assert!(eig[3] > 1e-6);
        assert!(zero_mode_residual(&t, &ops.d) < 1e-12);
    }

    #[test]
    fn aeat_vanishes() {
        let t = tetra();
        let ops = OperatorSet::assemble(&t).unwrap();
        assert!(ops.aeat_residual() < 1e-13);
    }
}
