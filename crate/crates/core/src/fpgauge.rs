//! Discrete complex derivative operators on faces, the Faddeev-Popov
//! pairing identity, and the Liouville field on circumcenters.
//!
//! `grad` and `grad_bar` are the derivatives of the linear interpolation of
//! a vertex function over a face; they reproduce affine functions exactly.
//! Contracted against the per-face Kahler block they satisfy
//! `Phi . D(f) . Psi-bar = (Area/R^2) grad_bar Phi  grad Psi-bar`,
//! the discrete form of the conformal-gauge Faddeev-Popov operator.

use crate::error::Result;
use crate::geometry::FaceGeom;
use crate::mesh::{FaceId, FaceKind, Triangulation};
use crate::operators::kahler_face;
use num_complex::Complex64;

/// Face derivatives `(grad Phi, grad_bar Phi)` of a vertex function given
/// by its three values on a counterclockwise face.
pub fn gradient_ops(
    g: &FaceGeom,
    z: [Complex64; 3],
    phi: [Complex64; 3],
) -> (Complex64, Complex64) {
    let quarter_i = Complex64::new(0.0, 4.0); // 4i
    let area = Complex64::new(g.area, 0.0);
    let grad = (phi[0] * (z[2] - z[1]).conj()
        + phi[1] * (z[0] - z[2]).conj()
        + phi[2] * (z[1] - z[0]).conj())
        / (quarter_i * area);
    let grad_bar = -(phi[0] * (z[2] - z[1])
        + phi[1] * (z[0] - z[2])
        + phi[2] * (z[1] - z[0]))
        / (quarter_i * area);
    (grad, grad_bar)
}

/// Left side of the pairing identity: `sum_ij Phi_i D(f)_{ij} conj(Psi_j)`.
pub fn fp_pairing_direct(g: &FaceGeom, phi: [Complex64; 3], psi: [Complex64; 3]) -> Complex64 {
    let block = kahler_face(g);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc += phi[i] * block[i][j] * psi[j].conj();
        }
    }
    acc
}

/// Right side of the pairing identity:
/// `(Area/R^2) grad_bar Phi (f)  grad Psi-bar (f)`.
pub fn fp_pairing_factored(
    g: &FaceGeom,
    z: [Complex64; 3],
    phi: [Complex64; 3],
    psi: [Complex64; 3],
) -> Complex64 {
    let (_, grad_bar_phi) = gradient_ops(g, z, phi);
    let psi_conj = [psi[0].conj(), psi[1].conj(), psi[2].conj()];
    let (grad_psi_bar, _) = gradient_ops(g, z, psi_conj);
    (g.area / (g.radius * g.radius)) * grad_bar_phi * grad_psi_bar
}

/// Summed pairing over all interior faces,
/// `Phi . D . Psi-bar = sum_f (Area_f / R_f^2) grad_bar Phi  grad Psi-bar`.
pub fn fp_pairing_sum(
    t: &Triangulation,
    phi: &[Complex64],
    psi: &[Complex64],
) -> Result<Complex64> {
    let cfg = t.config();
    let mut acc = Complex64::new(0.0, 0.0);
    for f in t.interior_faces() {
        let vs = t.faces()[f].v;
        let g = t.face_geometry(f)?;
        let z = [cfg.point(vs[0]), cfg.point(vs[1]), cfg.point(vs[2])];
        let pv = [phi[vs[0]], phi[vs[1]], phi[vs[2]]];
        let sv = [psi[vs[0]], psi[vs[1]], psi[vs[2]]];
        acc += fp_pairing_factored(g, z, pv, sv);
    }
    Ok(acc)
}

/// Liouville field on circumcenters: `phi(f) = -2 log R(f)`, together with
/// the face area as the dual volume element.
#[derive(Debug, Clone)]
pub struct LiouvilleField {
    /// `(face, phi(f), area)` per interior face.
    pub values: Vec<(FaceId, f64, f64)>,
}

impl LiouvilleField {
    pub fn quantum_area(&self, k: usize) -> f64 {
        self.values[k].1.exp()
    }
}

pub fn liouville_field(t: &Triangulation) -> Result<LiouvilleField> {
    let mut values = vec![];
    for (f, face) in t.faces().iter().enumerate() {
        if face.kind != FaceKind::Interior {
            continue;
        }
        let g = t.face_geometry(f)?;
        values.push((f, -2.0 * g.radius.ln(), g.area));
    }
    Ok(LiouvilleField { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PointConfig;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn face_of(z: [Complex64; 3]) -> FaceGeom {
        FaceGeom::new(z[0], z[1], z[2], 2.0).unwrap()
    }

    #[test]
    fn gradients_reproduce_affine_functions() {
        let z = [c(0., 0.), c(1., 0.), c(0., 1.)];
        let g = face_of(z);
        // Phi = z
        let (gr, gb) = gradient_ops(&g, z, z);
        assert_relative_eq!(gr.re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(gr.im, 0.0, epsilon = 1e-14);
        assert!(gb.norm() < 1e-14);
        // Phi = zbar
        let zb = [z[0].conj(), z[1].conj(), z[2].conj()];
        let (gr, gb) = gradient_ops(&g, z, zb);
        assert!(gr.norm() < 1e-14);
        assert_relative_eq!(gb.re, 1.0, epsilon = 1e-14);
        // Phi constant
        let ones = [c(1., 0.); 3];
        let (gr, gb) = gradient_ops(&g, z, ones);
        assert!(gr.norm() < 1e-14 && gb.norm() < 1e-14);
        // General affine a + b z + c zbar
        let (a, b, cc) = (c(0.3, -0.2), c(1.7, 0.4), c(-0.6, 1.1));
        let phi = [
            a + b * z[0] + cc * z[0].conj(),
            a + b * z[1] + cc * z[1].conj(),
            a + b * z[2] + cc * z[2].conj(),
        ];
        let (gr, gb) = gradient_ops(&g, z, phi);
        assert!((gr - b).norm() < 1e-13);
        assert!((gb - cc).norm() < 1e-13);
    }

    #[test]
    fn pairing_identity_random() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..1000 {
            let mut z = [
                c(rnd(), rnd()),
                c(rnd() + 2.5, rnd()),
                c(rnd(), rnd() + 2.5),
            ];
            if crate::geometry::signed_area(z[0], z[1], z[2]) < 0.0 {
                z.swap(1, 2);
            }
            let g = face_of(z);
            let phi = [c(rnd(), rnd()), c(rnd(), rnd()), c(rnd(), rnd())];
            let psi = [c(rnd(), rnd()), c(rnd(), rnd()), c(rnd(), rnd())];
            let lhs = fp_pairing_direct(&g, phi, psi);
            let rhs = fp_pairing_factored(&g, z, phi, psi);
            let scale = phi.iter().chain(&psi).map(|v| v.norm()).fold(1.0, f64::max)
                / (g.radius * g.radius);
            assert!(
                (lhs - rhs).norm() < 1e-12 * scale.max(1.0),
                "lhs {lhs} rhs {rhs}"
            );
        }
    }

    #[test]
    fn holomorphic_affine_pairs_to_zero() {
        let z = [c(0.1, 0.1), c(2.0, -0.4), c(0.7, 1.9)];
        let g = face_of(z);
        // grad_bar Phi = 0 for Phi affine in z only.
        let phi = [2.0 * z[0] + 1.0, 2.0 * z[1] + 1.0, 2.0 * z[2] + 1.0];
        let psi = [c(0.4, 0.1), c(-0.3, 0.9), c(1.2, -0.7)];
        let lhs = fp_pairing_direct(&g, phi, psi);
        assert!(lhs.norm() < 1e-13);
    }

    #[test]
    fn equilateral_zbar_pairing() {
        let z: [Complex64; 3] = std::array::from_fn(|k| {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0)
        });
        let g = face_of(z);
        let zb = [z[0].conj(), z[1].conj(), z[2].conj()];
        let v = fp_pairing_direct(&g, zb, zb);
        let expect = g.area / (g.radius * g.radius);
        assert_relative_eq!(v.re, expect, epsilon = 1e-13);
        assert!(v.im.abs() < 1e-13);
    }

    #[test]
    fn summed_pairing_matches_assembled_d() {
        let cfg = PointConfig::fixed_face(
            vec![c(0., 0.), c(4., 0.), c(0., 4.), c(1.0, 1.1), c(0.7, 2.0)],
            [0, 1, 2],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        // Interior-face sum only: compare against the face-sum D without
        // the outer-face correction.
        let n = t.n_vertices();
        let mut d = crate::linalg::CMat::zeros(n, n);
        for f in t.interior_faces() {
            let vs = t.faces()[f].v;
            let block = kahler_face(t.face_geometry(f).unwrap());
            for i in 0..3 {
                for j in 0..3 {
                    d[(vs[i], vs[j])] += block[i][j];
                }
            }
        }
        let mut state = 123456789u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let phi: Vec<Complex64> = (0..n).map(|_| c(rnd(), rnd())).collect();
        let psi: Vec<Complex64> = (0..n).map(|_| c(rnd(), rnd())).collect();
        let mut direct = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                direct += phi[i] * d[(i, j)] * psi[j].conj();
            }
        }
        let factored = fp_pairing_sum(&t, &phi, &psi).unwrap();
        assert!(
            (direct - factored).norm() < 1e-11 * direct.norm().max(1.0),
            "direct {direct} factored {factored}"
        );
    }

    #[test]
    fn liouville_field_values() {
        let cfg = PointConfig::fixed_face(
            vec![c(0., 0.), c(4., 0.), c(0., 4.), c(1.0, 1.1)],
            [0, 1, 2],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let field = liouville_field(&t).unwrap();
        for (k, &(f, phi, _area)) in field.values.iter().enumerate() {
            let r = t.face_geometry(f).unwrap().radius;
            assert_relative_eq!(phi, -2.0 * r.ln(), epsilon = 1e-14);
            assert_relative_eq!(field.quantum_area(k), 1.0 / (r * r), epsilon = 1e-14);
        }
        // Scaling all points by lambda shifts phi by -2 log lambda.
        let lam = 3.0;
        let cfg2 = cfg.mobius(c(lam, 0.), c(0., 0.), c(0., 0.), c(1., 0.)).unwrap();
        let t2 = Triangulation::build(&cfg2).unwrap();
        let field2 = liouville_field(&t2).unwrap();
        for (a, b) in field.values.iter().zip(field2.values.iter()) {
            assert_relative_eq!(b.1, a.1 - 2.0 * lam.ln(), epsilon = 1e-12);
        }
    }
}
