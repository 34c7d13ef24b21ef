//! Planar geometric primitives: orientation and in-circle predicates,
//! circumcircles, signed areas and triangle angles.
//!
//! Predicates are evaluated in f64 against an absolute tolerance scaled to
//! the configuration's bounding box.  A result inside the tolerance band is
//! reported as degenerate rather than resolved by sign; callers are expected
//! to perturb.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Relative predicate tolerance; multiplied by the bounding-box scale raised
/// to the homogeneity degree of each predicate.
pub const GEOM_EPS: f64 = 1e-12;

/// Cross product `u x v` of two plane vectors given as complex numbers.
#[inline]
pub fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when
/// counterclockwise.
#[inline]
pub fn orient2d(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    cross(b - a, c - a)
}

/// In-circle determinant: positive when `d` lies strictly inside the
/// circumcircle of the counterclockwise triangle `(a, b, c)`.
///
/// Homogeneous of degree 4 in the coordinates.
pub fn incircle(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    let (ax, ay) = ((a - d).re, (a - d).im);
    let (bx, by) = ((b - d).re, (b - d).im);
    let (cx, cy) = ((c - d).re, (c - d).im);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - cy * b2) - ay * (bx * c2 - cx * b2) + a2 * (bx * cy - cx * by)
}

/// Signed area of a triangle, `((z3-z1)(cnj z2-z1) - (z2-z1)(cnj z3-z1)) / 4i`.
#[inline]
pub fn signed_area(z1: Complex64, z2: Complex64, z3: Complex64) -> f64 {
    // The displayed combination is purely imaginary; dividing by 4i leaves
    // Im[(z3-z1) * conj(z2-z1)] / 2 up to sign.  Expand directly:
    cross(z2 - z1, z3 - z1) / 2.0
}

/// Interior angle at `q` of the oriented triangle `(p, q, r)`.
///
/// Positive for a counterclockwise triangle, negative for a clockwise one;
/// principal branch of the complex logarithm.
#[inline]
pub fn corner_angle(p: Complex64, q: Complex64, r: Complex64) -> f64 {
    ((p - q) / (r - q)).arg()
}

/// Circumcenter of a non-degenerate triangle.
pub fn circumcenter(a: Complex64, b: Complex64, c: Complex64) -> Complex64 {
    let u = b - a;
    let v = c - a;
    let denom = 2.0 * cross(u, v);
    a + Complex64::i() * (v.norm_sqr() * u - u.norm_sqr() * v) / denom
}

/// Per-face geometric data for a finite triangle.
///
/// `area` is signed (positive for counterclockwise faces); `angles[k]` is the
/// unsigned interior angle at the face's k-th vertex.
#[derive(Debug, Clone, Copy)]
pub struct FaceGeom {
    pub circumcenter: Complex64,
    pub radius: f64,
    pub area: f64,
    pub angles: [f64; 3],
}

impl FaceGeom {
    /// Geometry of the triangle `(z1, z2, z3)`.
    ///
    /// `scale` is the configuration's bounding-box scale used by the
    /// degeneracy tolerance.  Fails with `CollinearFace` when the area
    /// magnitude is below tolerance.
    pub fn new(z1: Complex64, z2: Complex64, z3: Complex64, scale: f64) -> Result<Self> {
        let area = signed_area(z1, z2, z3);
        if area.abs() < GEOM_EPS * scale * scale {
            return Err(Error::CollinearFace);
        }
        let w = circumcenter(z1, z2, z3);
        let radius = ((z1 - w).norm() + (z2 - w).norm() + (z3 - w).norm()) / 3.0;
        let angles = [
            corner_angle(z3, z1, z2).abs(),
            corner_angle(z1, z2, z3).abs(),
            corner_angle(z2, z3, z1).abs(),
        ];
        Ok(FaceGeom {
            circumcenter: w,
            radius,
            area,
            angles,
        })
    }

    /// Cotangent of the interior angle at vertex `k`.
    #[inline]
    pub fn cot(&self, k: usize) -> f64 {
        1.0 / self.angles[k].tan()
    }
}

/// Bounding-box scale of a point set: the larger side of the axis-aligned
/// bounding box (floored away from zero so tolerances stay positive).
pub fn bbox_scale(points: &[Complex64]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        xmin = xmin.min(p.re);
        xmax = xmax.max(p.re);
        ymin = ymin.min(p.im);
        ymax = ymax.max(p.im);
    }
    (xmax - xmin).max(ymax - ymin).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn area_of_right_isoceles_is_half() {
        assert_relative_eq!(signed_area(c(0., 0.), c(1., 0.), c(0., 1.)), 0.5);
        assert_relative_eq!(signed_area(c(0., 0.), c(0., 1.), c(1., 0.)), -0.5);
    }

    #[test]
    fn circumcenter_of_0_4_4i() {
        let w = circumcenter(c(0., 0.), c(4., 0.), c(0., 4.));
        assert_relative_eq!(w.re, 2.0, epsilon = 1e-14);
        assert_relative_eq!(w.im, 2.0, epsilon = 1e-14);
        let g = FaceGeom::new(c(0., 0.), c(4., 0.), c(0., 4.), 4.0).unwrap();
        assert_relative_eq!(g.radius, 8f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn equilateral_angles() {
        let z = |k: i32| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0);
        let g = FaceGeom::new(z(0), z(1), z(2), 2.0).unwrap();
        for a in g.angles {
            assert_relative_eq!(a, std::f64::consts::FRAC_PI_3, epsilon = 1e-14);
        }
        assert_relative_eq!(g.radius, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn incircle_sign() {
        let (a, b, cc) = (c(0., 0.), c(1., 0.), c(0., 1.));
        assert!(incircle(a, b, cc, c(0.4, 0.4)) > 0.0);
        assert!(incircle(a, b, cc, c(2.0, 2.0)) < 0.0);
        // cocircular: fourth point on the circle through the other three
        assert_relative_eq!(incircle(a, b, cc, c(1., 1.)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_sum_is_pi() {
        let g = FaceGeom::new(c(0.1, 0.2), c(2.3, -0.4), c(0.9, 1.7), 2.3).unwrap();
        let s: f64 = g.angles.iter().sum();
        assert_relative_eq!(s, std::f64::consts::PI, epsilon = 1e-12);
    }
}
