//! The measure density of a Delaunay triangulation by three routes:
//! the angle Jacobian over an edge basis, the Kahler determinant, and the
//! signed sum over triangle-rooted spanning 3-trees.
//!
//! All determinants are carried as (log-magnitude, unit phase) pairs so the
//! values survive configurations with a couple hundred points.

use crate::combinatorics::{EdgeBasis, SpanningThreeTree};
use crate::error::{Error, Result};
use crate::linalg::{lu_logdet, CMat};
use crate::mesh::{Triangulation, VertexId};
use crate::operators::OperatorSet;
use num_complex::Complex64;
use std::f64::consts::LN_2;

/// Relative coincidence tolerance: configurations with a smaller minimum
/// pairwise distance (times the bounding-box scale) are rejected.
pub const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Jacobian,
    Kahler,
    Trees,
}

/// A measure density in log form: `value = phase * exp(log_abs)`.
#[derive(Clone, Copy, Debug)]
pub struct MeasureValue {
    pub log_abs: f64,
    /// Unit phase of the signed quantity behind the absolute value; real
    /// (+-1) up to roundoff for all three routes.
    pub phase: Complex64,
    pub route: Route,
}

impl MeasureValue {
    pub fn value(&self) -> f64 {
        self.log_abs.exp()
    }

    /// Relative deviation of two log-magnitudes: `|exp(la - lb) - 1|`.
    pub fn relative_deviation(&self, other: &MeasureValue) -> f64 {
        ((self.log_abs - other.log_abs).exp() - 1.0).abs()
    }

    /// Deviation of the phase from the real axis.
    pub fn phase_imbalance(&self) -> f64 {
        self.phase.im.abs()
    }
}

fn guard_coincidence(t: &Triangulation) -> Result<()> {
    let min = t.config().min_pairwise_distance();
    let tol = COINCIDENCE_TOL * t.scale();
    if min < tol {
        return Err(Error::CoincidingPoints { min_dist: min, tol });
    }
    Ok(())
}

/// Measure by the Jacobian route:
/// `|(2/i)^N det(d theta_e / d(z, zbar)_v)|` over free vertices and basis
/// edges.
pub fn measure_jacobian(
    t: &Triangulation,
    ops: &OperatorSet,
    basis: &EdgeBasis,
) -> Result<MeasureValue> {
    guard_coincidence(t)?;
    let free = t.config().free_vertices();
    let n = free.len();
    assert_eq!(basis.basis.len(), 2 * n, "basis size mismatch");
    // Rows: d theta/d z_v for each free v, then d theta/d zbar_v (the
    // conjugate of the holomorphic rows since theta is real).
    let m = CMat::from_fn(2 * n, 2 * n, |i, jcol| {
        let e = basis.basis[jcol];
        if i < n {
            ops.j[(free[i], e)]
        } else {
            ops.j[(free[i - n], e)].conj()
        }
    });
    let det = lu_logdet(&m);
    if det.is_singular() {
        return Err(Error::SingularMatrix);
    }
    // (2/i)^N det is real; take its magnitude and report the phase.
    let pref_phase = (Complex64::new(0.0, -1.0)).powu(n as u32); // (1/i)^N
    Ok(MeasureValue {
        log_abs: det.log_abs + n as f64 * LN_2,
        phase: det.phase * pref_phase,
        route: Route::Jacobian,
    })
}

/// Measure by the Kahler route: `2^N det(D with fixed rows/cols removed)`.
pub fn measure_kahler(t: &Triangulation, d: &CMat) -> Result<MeasureValue> {
    guard_coincidence(t)?;
    let free = t.config().free_vertices();
    let n = free.len();
    let sub = d.select(&free, &free);
    let det = lu_logdet(&sub);
    if det.is_singular() && n > 0 {
        return Err(Error::SingularMatrix);
    }
    Ok(MeasureValue {
        log_abs: det.log_abs + n as f64 * LN_2,
        phase: det.phase,
        route: Route::Kahler,
    })
}

/// Measure by the spanning-3-tree route:
/// `(1/2i)^N sum_F eps(F) prod 1/(z_v - z_v') prod 1/(zbar_v - zbar_v')`.
///
/// The sum is real up to roundoff; its magnitude equals the other routes.
pub fn measure_trees(
    t: &Triangulation,
    trees: &[SpanningThreeTree],
) -> Result<MeasureValue> {
    guard_coincidence(t)?;
    let cfg = t.config();
    let n = t.n_free();
    let mut total = Complex64::new(0.0, 0.0);
    for tree in trees {
        let mut term = Complex64::new(tree.epsilon as f64, 0.0);
        for &(v, w) in &tree.tree_a {
            term /= cfg.point(v) - cfg.point(w);
        }
        for &(v, w) in &tree.tree_b {
            term /= (cfg.point(v) - cfg.point(w)).conj();
        }
        total += term;
    }
    // (1/2i)^N = (-i/2)^N
    let pref = Complex64::new(0.0, -0.5).powu(n as u32);
    let value = pref * total;
    if value.norm() == 0.0 {
        return Err(Error::SingularMatrix);
    }
    Ok(MeasureValue {
        log_abs: value.norm().ln(),
        phase: value / value.norm(),
        route: Route::Trees,
    })
}

/// Log of the gauge-independent density
/// `H = det(D_{without a,b,c}) / |Delta_3(z_a, z_b, z_c)|^2`.
///
/// Requires the fixed-face convention (all vertices finite); `a, b, c` are
/// arbitrary distinct vertices, not necessarily a face.
pub fn density_h(t: &Triangulation, d: &CMat, triple: [VertexId; 3]) -> Result<f64> {
    let cfg = t.config();
    if cfg.infinity().is_some() {
        return Err(Error::InvalidInput(
            "density H needs the fixed-face convention".into(),
        ));
    }
    let [a, b, c] = triple;
    if a == b || b == c || a == c || triple.iter().any(|&v| v >= t.n_vertices()) {
        return Err(Error::InvalidInput("triple must be three distinct vertices".into()));
    }
    let keep: Vec<VertexId> = (0..t.n_vertices()).filter(|v| !triple.contains(v)).collect();
    let det = lu_logdet(&d.select(&keep, &keep));
    if det.is_singular() {
        return Err(Error::SingularMatrix);
    }
    let (za, zb, zc) = (cfg.point(a), cfg.point(b), cfg.point(c));
    let vdm = (za - zb).norm().ln() + (za - zc).norm().ln() + (zb - zc).norm().ln();
    Ok(det.log_abs - 2.0 * vdm)
}

/// Convenience: all routes on one configuration with the canonical basis.
pub struct MeasureReport {
    pub n_free: usize,
    pub jacobian: MeasureValue,
    pub kahler: MeasureValue,
    pub trees: Option<MeasureValue>,
    pub tree_count: Option<usize>,
}

impl MeasureReport {
    pub fn max_relative_deviation(&self) -> f64 {
        let mut worst = self.jacobian.relative_deviation(&self.kahler);
        if let Some(tv) = &self.trees {
            worst = worst.max(tv.relative_deviation(&self.kahler));
        }
        worst
    }
}

/// Evaluates every applicable route: Jacobian and Kahler always, trees when
/// the fixed vertices form a face and N is within the enumeration guard.
pub fn evaluate_all_routes(t: &Triangulation) -> Result<MeasureReport> {
    let ops = OperatorSet::assemble(t)?;
    let kahler = measure_kahler(t, &ops.d)?;
    let (jacobian, trees, tree_count) = match t.outer_face() {
        Some(f0) => {
            let basis = crate::combinatorics::find_edge_basis(t, f0)?;
            let jac = measure_jacobian(t, &ops, &basis)?;
            if t.n_free() <= crate::combinatorics::ENUMERATION_LIMIT {
                let list = crate::combinatorics::enumerate_3trees(t, f0)?;
                let tv = measure_trees(t, &list)?;
                (jac, Some(tv), Some(list.len()))
            } else {
                (jac, None, None)
            }
        }
        None => {
            // Infinity convention: any face works as the basis root.
            let f0 = t.interior_faces().next().ok_or(Error::SingularMatrix)?;
            let basis = crate::combinatorics::find_edge_basis(t, f0)?;
            (measure_jacobian(t, &ops, &basis)?, None, None)
        }
    };
    Ok(MeasureReport {
        n_free: t.n_free(),
        jacobian,
        kahler,
        trees,
        tree_count,
    })
}

// ---------------------------------------------------------------------------
// Collapse scaling of a single 3-tree term.
// ---------------------------------------------------------------------------

/// Scaling analysis of one 3-tree's measure term when a vertex cluster
/// collapses to its centroid.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    /// Combinatorial exponent `n = 2 P - (# internal links of I and I')`.
    pub exponent: i64,
    /// Log-log slope fitted over the scan window.
    pub fitted: f64,
    /// Whether the superficial-convergence inequality is saturated.
    pub saturated: bool,
}

/// Scales `z_v -> Z0 + x (z_v - Z0)` for `v` in `cluster` and fits the decay
/// of the tree term's density `x^{2P} |prod 1/(z - z')|` against the
/// combinatorial exponent.  The triangulation combinatorics must be stable
/// over the scan window.
pub fn scaling_exponent(
    t: &Triangulation,
    cluster: &[VertexId],
    tree: &SpanningThreeTree,
) -> Result<ScalingReport> {
    let cfg = t.config();
    let fixed = cfg.fixed();
    if cluster.len() < 2 {
        return Err(Error::InvalidInput("cluster needs at least two vertices".into()));
    }
    if cluster.iter().any(|v| fixed.contains(v)) {
        return Err(Error::InvalidInput("cluster must avoid fixed vertices".into()));
    }
    let p = cluster.len() as i64;
    let in_cluster = |v: VertexId| cluster.contains(&v);
    let internal = |pairs: &[(VertexId, VertexId)]| {
        pairs
            .iter()
            .filter(|&&(v, w)| in_cluster(v) && in_cluster(w))
            .count() as i64
    };
    let links_a = internal(&tree.tree_a);
    let links_b = internal(&tree.tree_b);
    let exponent = 2 * p - links_a - links_b;

    let centroid: Complex64 = cluster.iter().map(|&v| cfg.point(v)).sum::<Complex64>()
        / cluster.len() as f64;
    let base_signature = t.edge_signature();
    let term_log = |x: f64| -> Result<f64> {
        let mut cfg2 = cfg.clone();
        for &v in cluster {
            cfg2 = cfg2.with_point(v, centroid + x * (cfg.point(v) - centroid));
        }
        let t2 = Triangulation::build(&cfg2)?;
        if t2.edge_signature() != base_signature {
            return Err(Error::CombinatoricsChanged);
        }
        let mut log_abs = 2.0 * p as f64 * x.ln();
        for &(v, w) in tree.tree_a.iter().chain(tree.tree_b.iter()) {
            log_abs -= (cfg2.point(v) - cfg2.point(w)).norm().ln();
        }
        Ok(log_abs)
    };

    // Log-log slope over x in [1e-4, 1e-2].
    let xs: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let mut pts = vec![];
    for &x in &xs {
        pts.push((x.ln(), term_log(x)?));
    }
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (lx, ly) in &pts {
        num += (lx - mean_x) * (ly - mean_y);
        den += (lx - mean_x) * (lx - mean_x);
    }
    let fitted = num / den;
    // The inequality is saturated when the internal links reach 2P - 3.
    let saturated = links_a + links_b == 2 * p - 3;
    Ok(ScalingReport {
        exponent,
        fitted,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{enumerate_3trees, find_edge_basis, random_edge_basis};
    use crate::mesh::PointConfig;
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
    fn three_routes_agree_on_tetrahedron() {
        let t = tetra();
        let report = evaluate_all_routes(&t).unwrap();
        assert!(report.jacobian.relative_deviation(&report.kahler) < 1e-10);
        let trees = report.trees.unwrap();
        assert!(trees.relative_deviation(&report.kahler) < 1e-10);
        assert!(trees.phase_imbalance() < 1e-10, "tree sum must be real");
        assert_eq!(report.tree_count, Some(6));
        // Kahler determinant is real positive.
        assert!(report.kahler.phase.re > 0.0);
        assert!(report.kahler.phase_imbalance() < 1e-10);
    }

    #[test]
    fn measure_is_basis_independent() {
        use rand::SeedableRng;
        let cfg = PointConfig::fixed_face(
            vec![c(0., 0.), c(4., 0.), c(0., 4.), c(1.0, 1.1), c(0.7, 2.0)],
            [0, 1, 2],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let ops = OperatorSet::assemble(&t).unwrap();
        let canonical = find_edge_basis(&t, t.outer_face().unwrap()).unwrap();
        let reference = measure_jacobian(&t, &ops, &canonical).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let basis = random_edge_basis(&t, &mut rng).unwrap();
            let value = measure_jacobian(&t, &ops, &basis).unwrap();
            assert!(reference.relative_deviation(&value) < 1e-10);
        }
    }

    #[test]
    fn empty_configuration_measures_one() {
        let cfg =
            PointConfig::fixed_face(vec![c(0., 0.), c(1., 0.), c(0., 1.)], [0, 1, 2]).unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let ops = OperatorSet::assemble(&t).unwrap();
        let v = measure_kahler(&t, &ops.d).unwrap();
        assert!(v.log_abs.abs() < 1e-14);
    }

    #[test]
    fn collapse_divergence() {
        // As two free points approach, the measure density grows.
        let base = |d: f64| {
            let cfg = PointConfig::fixed_face(
                vec![
                    c(0., 0.),
                    c(4., 0.),
                    c(0., 4.),
                    c(1.0, 1.0),
                    c(1.0 + d, 1.0),
                ],
                [0, 1, 2],
            )
            .unwrap();
            let t = Triangulation::build(&cfg).unwrap();
            evaluate_all_routes(&t).unwrap().kahler.log_abs
        };
        assert!(base(1e-4) > base(1e-2));
        assert!(base(1e-2) > base(1e-1));
    }

    #[test]
    fn coinciding_points_rejected() {
        let cfg = PointConfig::fixed_face(
            vec![
                c(0., 0.),
                c(4., 0.),
                c(0., 4.),
                c(1.0, 1.0),
                c(1.0 + 5e-10, 1.0),
            ],
            [0, 1, 2],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let ops = OperatorSet::assemble(&t).unwrap();
        assert!(matches!(
            measure_kahler(&t, &ops.d),
            Err(Error::CoincidingPoints { .. })
        ));
    }

    #[test]
    fn density_h_triple_independent() {
        let cfg = PointConfig::fixed_face(
            vec![c(0., 0.), c(4., 0.), c(0., 4.), c(1.0, 1.1), c(0.7, 2.0)],
            [0, 1, 2],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let ops = OperatorSet::assemble(&t).unwrap();
        let h0 = density_h(&t, &ops.d, [0, 1, 2]).unwrap();
        for triple in [[0, 1, 3], [1, 3, 4], [2, 3, 4], [0, 2, 4]] {
            let h = density_h(&t, &ops.d, triple).unwrap();
            assert!(
                (h - h0).abs() < 1e-9,
                "triple {triple:?}: log H {h} vs {h0}"
            );
        }
    }

    #[test]
    fn scaling_exponent_two_point_cluster() {
        let cfg = PointConfig::fixed_face(
            vec![c(0., 0.), c(4., 0.), c(0., 4.), c(1.0, 1.0), c(1.4, 1.2)],
            [0, 1, 2],
        )
        .unwrap();
        let t = Triangulation::build(&cfg).unwrap();
        let trees = enumerate_3trees(&t, t.outer_face().unwrap()).unwrap();
        for tree in &trees {
            let rep = scaling_exponent(&t, &[3, 4], tree).unwrap();
            assert!(rep.exponent > 2, "exponent must exceed 2");
            assert!(
                (rep.fitted - rep.exponent as f64).abs() < 0.05,
                "fitted {} vs combinatorial {}",
                rep.fitted,
                rep.exponent
            );
        }
    }
}
