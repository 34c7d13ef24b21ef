//! Point configurations and their Delaunay triangulations.
//!
//! A configuration is a finite set of plane points with three designated
//! fixed vertices.  Two conventions are supported:
//!
//! * **fixed face** — the three fixed points are the convex hull of the
//!   configuration; the unbounded region is kept as an explicit `Outer` face
//!   (clockwise as seen in the plane), closing the triangulation to a sphere.
//! * **infinity** — an explicit sentinel vertex at infinity is adjacent to
//!   every hull vertex; the faces containing it are `Infinite`.
//!
//! Construction is incremental insertion (lexicographic order) with Lawson
//! flips over a ghost vertex.  The frozen `Triangulation` is immutable: edges
//! are sorted by `(min vertex, max vertex)` and carry the circle-intersection
//! angle `theta(e)`, faces carry circumcircle data.

use crate::error::{Error, Result};
use crate::geometry::{self, bbox_scale, corner_angle, orient2d, FaceGeom, GEOM_EPS};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

/// Which gauge-fixing convention a configuration uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    FixedFace,
    Infinity,
}

/// An ordered set of plane points with three designated fixed vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfig {
    points: Vec<Complex64>,
    fixed: [VertexId; 3],
    infinity: Option<VertexId>,
}

impl PointConfig {
    /// Fixed-face convention: the three fixed vertices are expected to form
    /// the convex hull (checked at build time, not here).
    pub fn fixed_face(points: Vec<Complex64>, fixed: [VertexId; 3]) -> Result<Self> {
        let cfg = PointConfig {
            points,
            fixed,
            infinity: None,
        };
        cfg.check_invariants()?;
        Ok(cfg)
    }

    /// Infinity convention: appends a sentinel vertex at infinity (id =
    /// `points.len()`) and fixes it together with two finite vertices.
    pub fn with_infinity(points: Vec<Complex64>, finite_fixed: [VertexId; 2]) -> Result<Self> {
        let inf = points.len();
        let cfg = PointConfig {
            points,
            fixed: [inf, finite_fixed[0], finite_fixed[1]],
            infinity: Some(inf),
        };
        cfg.check_invariants()?;
        Ok(cfg)
    }

    fn check_invariants(&self) -> Result<()> {
        let n = self.n_vertices();
        if n < 3 {
            return Err(Error::InvalidInput("need at least 3 vertices".into()));
        }
        if let Some(inf) = self.infinity {
            if inf != self.points.len() {
                return Err(Error::InvalidInput(
                    "infinity vertex id must equal the number of finite points".into(),
                ));
            }
            if !self.fixed.contains(&inf) {
                return Err(Error::InvalidInput(
                    "infinity vertex must be one of the fixed vertices".into(),
                ));
            }
        }
        let [a, b, c] = self.fixed;
        if a == b || b == c || a == c {
            return Err(Error::InvalidInput("fixed vertices must be distinct".into()));
        }
        if self.fixed.iter().any(|&v| v >= n) {
            return Err(Error::InvalidInput("fixed vertex index out of range".into()));
        }
        let scale = self.scale();
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                if (self.points[i] - self.points[j]).norm() <= GEOM_EPS * scale {
                    return Err(Error::DuplicatePoint(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn convention(&self) -> Convention {
        if self.infinity.is_some() {
            Convention::Infinity
        } else {
            Convention::FixedFace
        }
    }

    /// Total vertex count including the infinity sentinel.
    pub fn n_vertices(&self) -> usize {
        self.points.len() + usize::from(self.infinity.is_some())
    }

    /// Number of free (non-fixed) vertices; the paper's N.
    pub fn n_free(&self) -> usize {
        self.n_vertices() - 3
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn fixed(&self) -> [VertexId; 3] {
        self.fixed
    }

    pub fn infinity(&self) -> Option<VertexId> {
        self.infinity
    }

    pub fn is_infinite(&self, v: VertexId) -> bool {
        self.infinity == Some(v)
    }

    /// Coordinate of a finite vertex.  Panics on the infinity sentinel.
    pub fn point(&self, v: VertexId) -> Complex64 {
        assert!(
            !self.is_infinite(v),
            "coordinate of the infinity vertex requested"
        );
        self.points[v]
    }

    /// Free vertex ids in ascending order.
    pub fn free_vertices(&self) -> Vec<VertexId> {
        (0..self.n_vertices())
            .filter(|v| !self.fixed.contains(v))
            .collect()
    }

    pub fn scale(&self) -> f64 {
        bbox_scale(&self.points)
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                d = d.min((self.points[i] - self.points[j]).norm());
            }
        }
        d
    }

    /// Applies the Mobius map `z -> (a z + b) / (c z + d)` to every finite
    /// point.  Requires `ad - bc != 0`; fails with `PoleHit` if a point lands
    /// on the pole, or if the configuration has an infinity vertex and
    /// `c != 0` (the sentinel would become finite).
    pub fn mobius(&self, a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if (a * d - b * c).norm() < 1e-300 {
            return Err(Error::InvalidInput("Mobius map is singular".into()));
        }
        if self.infinity.is_some() && c.norm() > 0.0 {
            return Err(Error::PoleHit(self.infinity.unwrap()));
        }
        let mut points = Vec::with_capacity(self.points.len());
        for (v, &z) in self.points.iter().enumerate() {
            let den = c * z + d;
            if den.norm() < 1e-14 * (c.norm() * z.norm() + d.norm()).max(1e-300) {
                return Err(Error::PoleHit(v));
            }
            points.push((a * z + b) / den);
        }
        Ok(PointConfig {
            points,
            fixed: self.fixed,
            infinity: self.infinity,
        })
    }

    /// Returns a copy with one finite vertex displaced.
    pub fn with_point(&self, v: VertexId, z: Complex64) -> Self {
        let mut cfg = self.clone();
        cfg.points[v] = z;
        cfg
    }
}

/// JSON schema for point sets:
/// `{ "points": [[re, im], ...], "fixed": [i, j, k], "infinity": null | idx }`.
#[derive(Serialize, Deserialize)]
pub struct PointsFile {
    pub points: Vec<[f64; 2]>,
    pub fixed: [usize; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infinity: Option<usize>,
}

impl PointsFile {
    pub fn from_config(cfg: &PointConfig) -> Self {
        PointsFile {
            points: cfg.points.iter().map(|z| [z.re, z.im]).collect(),
            fixed: cfg.fixed,
            infinity: cfg.infinity,
        }
    }

    pub fn into_config(self) -> Result<PointConfig> {
        let points: Vec<Complex64> = self
            .points
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        match self.infinity {
            None => PointConfig::fixed_face(points, self.fixed),
            Some(inf) => {
                if inf != points.len() {
                    return Err(Error::Format(
                        "infinity index must equal the number of finite points".into(),
                    ));
                }
                let finite: Vec<usize> = self.fixed.iter().copied().filter(|&v| v != inf).collect();
                if finite.len() != 2 {
                    return Err(Error::Format(
                        "fixed must contain the infinity index and two finite indices".into(),
                    ));
                }
                PointConfig::with_infinity(points, [finite[0], finite[1]])
            }
        }
    }
}

pub fn config_from_json(s: &str) -> Result<PointConfig> {
    let pf: PointsFile = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
    pf.into_config()
}

pub fn config_to_json(cfg: &PointConfig) -> String {
    serde_json::to_string_pretty(&PointsFile::from_config(cfg)).expect("serialize")
}

/// Role of a face in the sphere closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceKind {
    /// Bounded plane triangle, counterclockwise.
    Interior,
    /// The unbounded face of the fixed-face convention; stored clockwise.
    Outer,
    /// A face containing the infinity vertex.
    Infinite,
}

#[derive(Clone, Debug)]
pub struct Face {
    /// Vertices in the face's cyclic orientation (sphere-consistent).
    pub v: [VertexId; 3],
    pub kind: FaceKind,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints with `v[0] < v[1]`.
    pub v: [VertexId; 2],
    /// The two adjacent faces.
    pub faces: [FaceId; 2],
    /// Circle-intersection angle `theta(e) = pi - theta*(e)`, in `[0, pi)`.
    pub theta: f64,
}

/// An immutable Delaunay triangulation of a `PointConfig`, closed to a
/// sphere.  Safe to share across threads.
#[derive(Clone, Debug)]
pub struct Triangulation {
    config: PointConfig,
    faces: Vec<Face>,
    edges: Vec<Edge>,
    edge_ids: HashMap<(VertexId, VertexId), EdgeId>,
    /// Edge ids opposite each face corner: `face_edges[f][k]` joins
    /// `v[k+1]` and `v[k+2]`.
    face_edges: Vec<[EdgeId; 3]>,
    /// Incident edges per vertex in cyclic (sphere-trigonometric) order.
    vertex_edges: Vec<Vec<EdgeId>>,
    /// Geometry per face; `None` for infinite faces.  The outer face's
    /// geometry is computed on its counterclockwise reversal.
    geom: Vec<Option<FaceGeom>>,
    outer_face: Option<FaceId>,
    scale: f64,
}

impl Triangulation {
    /// Builds the Delaunay triangulation of a configuration.
    pub fn build(config: &PointConfig) -> Result<Self> {
        build_triangulation(config)
    }

    pub fn config(&self) -> &PointConfig {
        &self.config
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_vertices(&self) -> usize {
        self.config.n_vertices()
    }

    pub fn n_free(&self) -> usize {
        self.config.n_free()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn outer_face(&self) -> Option<FaceId> {
        self.outer_face
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        (0..self.faces.len()).filter(|&f| self.faces[f].kind == FaceKind::Interior)
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.edge_ids.get(&(u.min(v), u.max(v))).copied()
    }

    /// Edge ids of a face, slot `k` opposite corner `k`.
    pub fn face_edge_ids(&self, f: FaceId) -> [EdgeId; 3] {
        self.face_edges[f]
    }

    /// Incident edges of a vertex in cyclic order.
    pub fn vertex_star(&self, v: VertexId) -> &[EdgeId] {
        &self.vertex_edges[v]
    }

    /// Geometry of a face with finite vertices (interior faces as stored;
    /// the outer face on its counterclockwise reversal).
    pub fn face_geometry(&self, f: FaceId) -> Result<&FaceGeom> {
        self.geom[f].as_ref().ok_or(Error::CollinearFace)
    }

    /// The vertex of face `f` opposite edge `e`.
    pub fn apex(&self, f: FaceId, e: EdgeId) -> VertexId {
        let face = &self.faces[f];
        let [u, v] = self.edges[e].v;
        *face
            .v
            .iter()
            .find(|&&w| w != u && w != v)
            .expect("edge not on face")
    }

    /// Circle-intersection angle of an edge (cached at build time).
    pub fn edge_theta(&self, e: EdgeId) -> f64 {
        self.edges[e].theta
    }

    /// Sum of edge angles around a vertex; `2 pi` for every vertex of a
    /// valid Delaunay triangulation (flatness).
    pub fn vertex_angle_sum(&self, v: VertexId) -> f64 {
        self.vertex_edges[v].iter().map(|&e| self.edges[e].theta).sum()
    }

    /// Defect angle of a face: `theta + theta' + theta'' - pi`.
    pub fn defect_angle(&self, f: FaceId) -> f64 {
        self.face_edges[f]
            .iter()
            .map(|&e| self.edges[e].theta)
            .sum::<f64>()
            - PI
    }

    /// Sorted list of undirected edges over finite vertices plus spokes;
    /// two builds of combinatorially equal triangulations compare equal.
    pub fn edge_signature(&self) -> Vec<(VertexId, VertexId)> {
        self.edges.iter().map(|e| (e.v[0], e.v[1])).collect()
    }

    /// Checks the empty-circumdisk property of every face against every
    /// non-member vertex.
    pub fn validate_delaunay(&self) -> DelaunayReport {
        let tol = GEOM_EPS;
        let flip_tol = 1e-9;
        let mut report = DelaunayReport {
            violations: vec![],
            flip_boundaries: vec![],
            min_margin: f64::INFINITY,
        };
        let finite_vertices: Vec<VertexId> = (0..self.n_vertices())
            .filter(|&v| !self.config.is_infinite(v))
            .collect();
        for f in 0..self.faces.len() {
            let face = &self.faces[f];
            for &u in &finite_vertices {
                if face.v.contains(&u) {
                    continue;
                }
                let zu = self.config.point(u);
                // Signed margin, positive when u is outside the face's
                // circumdisk, normalized by the bounding-box scale.
                let margin = match face.kind {
                    FaceKind::Interior => {
                        let g = self.geom[f].as_ref().unwrap();
                        ((zu - g.circumcenter).norm() - g.radius) / self.scale
                    }
                    FaceKind::Outer => {
                        // Circumdisk is the complement of the hull circle.
                        let g = self.geom[f].as_ref().unwrap();
                        (g.radius - (zu - g.circumcenter).norm()) / self.scale
                    }
                    FaceKind::Infinite => {
                        // Circumdisk is the half-plane beyond the hull edge
                        // (x, y); oriented so the domain lies on its right.
                        let (x, y) = self.finite_pair(f);
                        let (zx, zy) = (self.config.point(x), self.config.point(y));
                        -orient2d(zx, zy, zu) / ((zy - zx).norm() * self.scale)
                    }
                };
                report.min_margin = report.min_margin.min(margin);
                if margin < -tol {
                    report.violations.push((f, u, margin));
                } else if margin.abs() < flip_tol {
                    report.flip_boundaries.push((f, u, margin));
                }
            }
        }
        report
    }

    /// The two finite vertices of an infinite face, in stored (clockwise
    /// hull) order.
    fn finite_pair(&self, f: FaceId) -> (VertexId, VertexId) {
        let face = &self.faces[f];
        let k = face
            .v
            .iter()
            .position(|&v| self.config.is_infinite(v))
            .expect("not an infinite face");
        (face.v[(k + 1) % 3], face.v[(k + 2) % 3])
    }

    /// Signed apex angle of face `f` at the corner opposite edge `e`,
    /// following the stored orientation (negative on the outer face, zero
    /// for the infinity apex).
    fn apex_angle(&self, f: FaceId, e: EdgeId) -> f64 {
        let face = &self.faces[f];
        let [u, v] = self.edges[e].v;
        let k = face
            .v
            .iter()
            .position(|&w| w != u && w != v)
            .expect("edge not on face");
        if face.kind == FaceKind::Infinite {
            // Apex is either the infinity vertex (hull edge: contributes 0)
            // or a finite hull vertex of a spoke; spokes are handled in
            // `compute_thetas` directly.
            return 0.0;
        }
        let p = self.config.point(face.v[(k + 2) % 3]);
        let q = self.config.point(face.v[k]);
        let r = self.config.point(face.v[(k + 1) % 3]);
        corner_angle(p, q, r)
    }
}

/// Report from `validate_delaunay`: in-circumdisk violations and
/// near-cocircular (flip boundary) incidences, with normalized margins.
#[derive(Debug, Clone)]
pub struct DelaunayReport {
    pub violations: Vec<(FaceId, VertexId, f64)>,
    pub flip_boundaries: Vec<(FaceId, VertexId, f64)>,
    pub min_margin: f64,
}

impl DelaunayReport {
    pub fn is_delaunay(&self) -> bool {
        self.violations.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Incremental construction over a ghost vertex.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct BTri {
    v: [usize; 3],
    /// nbr[k] = triangle across the edge opposite v[k].
    nbr: [usize; 3],
    alive: bool,
}

struct Builder<'a> {
    pts: &'a [Complex64],
    ghost: usize,
    tris: Vec<BTri>,
    eps2: f64,
    eps4: f64,
}

impl<'a> Builder<'a> {
    fn is_ghost(&self, t: usize) -> bool {
        self.tris[t].v.contains(&self.ghost)
    }

    fn z(&self, v: usize) -> Complex64 {
        self.pts[v]
    }

    /// Finite vertices of a ghost triangle in stored (clockwise hull) order.
    fn ghost_pair(&self, t: usize) -> (usize, usize) {
        let tri = &self.tris[t];
        let k = tri.v.iter().position(|&v| v == self.ghost).unwrap();
        (tri.v[(k + 1) % 3], tri.v[(k + 2) % 3])
    }

    /// Whether `p` lies strictly inside the circumdisk of triangle `t`
    /// (half-plane beyond the hull edge for ghost triangles).
    fn in_circum(&self, t: usize, p: usize) -> bool {
        if p == self.ghost {
            return false;
        }
        if self.is_ghost(t) {
            let (x, y) = self.ghost_pair(t);
            orient2d(self.z(x), self.z(y), self.z(p)) > self.eps2
        } else {
            let [a, b, c] = self.tris[t].v;
            geometry::incircle(self.z(a), self.z(b), self.z(c), self.z(p)) > self.eps4
        }
    }

    /// Updates whichever neighbor slot of `t` pointed at `old` to `new`.
    fn relink(&mut self, t: usize, old: usize, new: usize) {
        if t == usize::MAX {
            return;
        }
        for k in 0..3 {
            if self.tris[t].nbr[k] == old {
                self.tris[t].nbr[k] = new;
                return;
            }
        }
        panic!("broken neighbor link");
    }

    fn seed(&mut self, order: &[usize]) -> Result<(usize, usize, usize)> {
        if order.len() < 3 {
            return Err(Error::DegenerateInput("fewer than 3 finite points".into()));
        }
        let (i0, i1) = (order[0], order[1]);
        let mut i2 = None;
        for &cand in &order[2..] {
            if orient2d(self.z(i0), self.z(i1), self.z(cand)).abs() > self.eps2 {
                i2 = Some(cand);
                break;
            }
        }
        let i2 = i2.ok_or_else(|| Error::DegenerateInput("all points collinear".into()))?;
        let (a, b, c) = if orient2d(self.z(i0), self.z(i1), self.z(i2)) > 0.0 {
            (i0, i1, i2)
        } else {
            (i1, i0, i2)
        };
        let g = self.ghost;
        // t0 finite (a,b,c); ghosts carry the clockwise hull edges.
        self.tris = vec![
            BTri { v: [a, b, c], nbr: [2, 3, 1], alive: true },
            BTri { v: [b, a, g], nbr: [3, 2, 0], alive: true },
            BTri { v: [c, b, g], nbr: [1, 3, 0], alive: true },
            BTri { v: [a, c, g], nbr: [2, 1, 0], alive: true },
        ];
        Ok((a, b, c))
    }

    /// Finds the triangle containing `p`: strictly inside a finite triangle
    /// or strictly visible from a ghost edge.
    fn locate(&self, p: usize) -> Result<usize> {
        let zp = self.z(p);
        for (t, tri) in self.tris.iter().enumerate() {
            if !tri.alive {
                continue;
            }
            if self.is_ghost(t) {
                let (x, y) = self.ghost_pair(t);
                if orient2d(self.z(x), self.z(y), zp) > self.eps2 {
                    return Ok(t);
                }
            } else {
                let [a, b, c] = tri.v;
                let o0 = orient2d(self.z(b), self.z(c), zp);
                let o1 = orient2d(self.z(c), self.z(a), zp);
                let o2 = orient2d(self.z(a), self.z(b), zp);
                if o0 > self.eps2 && o1 > self.eps2 && o2 > self.eps2 {
                    return Ok(t);
                }
            }
        }
        Err(Error::DegenerateInput(format!(
            "point {p} lies on an edge or vertex of the current triangulation within tolerance"
        )))
    }

    /// 1-3 split of triangle `t` at interior point `p`; returns the edges to
    /// re-check as (triangle, slot) pairs.
    fn split(&mut self, t: usize, p: usize) -> Vec<(usize, usize)> {
        let BTri { v: [a, b, c], nbr: [na, nb, nc], .. } = self.tris[t];
        self.tris[t].alive = false;
        let t0 = self.tris.len();
        // (a,b,p), (b,c,p), (c,a,p): cyclic orientation preserved even when
        // one of a,b,c is the ghost.
        self.tris.push(BTri { v: [a, b, p], nbr: [t0 + 1, t0 + 2, nc], alive: true });
        self.tris.push(BTri { v: [b, c, p], nbr: [t0 + 2, t0, na], alive: true });
        self.tris.push(BTri { v: [c, a, p], nbr: [t0, t0 + 1, nb], alive: true });
        self.relink(nc, t, t0);
        self.relink(na, t, t0 + 1);
        self.relink(nb, t, t0 + 2);
        vec![(t0, 2), (t0 + 1, 2), (t0 + 2, 2)]
    }

    /// Lawson flip of the edge opposite slot `k` of triangle `t`.
    /// Returns the two new triangles.
    fn flip(&mut self, t: usize, k: usize) -> (usize, usize) {
        let t2 = self.tris[t].nbr[k];
        let p1 = self.tris[t].v[k];
        let (a, b) = (self.tris[t].v[(k + 1) % 3], self.tris[t].v[(k + 2) % 3]);
        // t = (a, b, p1) cyclically; t2 = (b, a, p2).
        let k2 = self.tris[t2]
            .v
            .iter()
            .position(|&v| v != a && v != b)
            .unwrap();
        let p2 = self.tris[t2].v[k2];
        let na = self.tris[t].nbr[(k + 1) % 3]; // across (b, p1)
        let nb = self.tris[t].nbr[(k + 2) % 3]; // across (p1, a)
        let nc = self.tris[t2].nbr[(k2 + 1) % 3]; // across (a, p2)
        let nd = self.tris[t2].nbr[(k2 + 2) % 3]; // across (p2, b)
        self.tris[t].alive = false;
        self.tris[t2].alive = false;
        let s0 = self.tris.len();
        // New triangles (a, p2, p1) and (p2, b, p1).
        self.tris.push(BTri { v: [a, p2, p1], nbr: [s0 + 1, nb, nc], alive: true });
        self.tris.push(BTri { v: [p2, b, p1], nbr: [na, s0, nd], alive: true });
        self.relink(nb, t, s0);
        self.relink(na, t, s0 + 1);
        self.relink(nc, t2, s0);
        self.relink(nd, t2, s0 + 1);
        (s0, s0 + 1)
    }

    /// Restores the Delaunay property by Lawson flips starting from the
    /// given (triangle, slot) edges.
    fn restore(&mut self, mut stack: Vec<(usize, usize)>) -> Result<()> {
        let mut guard = 0usize;
        let max_flips = 64 * (self.pts.len() + 4) * (self.pts.len() + 4);
        while let Some((t, k)) = stack.pop() {
            if !self.tris.get(t).map_or(false, |tr| tr.alive) {
                continue;
            }
            let t2 = self.tris[t].nbr[k];
            if t2 == usize::MAX || !self.tris[t2].alive {
                continue;
            }
            let d2 = {
                let (a, b) = (self.tris[t].v[(k + 1) % 3], self.tris[t].v[(k + 2) % 3]);
                let k2 = self.tris[t2].v.iter().position(|&v| v != a && v != b).unwrap();
                self.tris[t2].v[k2]
            };
            if !self.in_circum(t, d2) {
                continue;
            }
            guard += 1;
            if guard > max_flips {
                return Err(Error::DegenerateInput(
                    "flip restoration did not terminate (near-degenerate input)".into(),
                ));
            }
            let (s0, s1) = self.flip(t, k);
            // Re-check the four boundary edges of the flipped quad.
            stack.push((s0, 1));
            stack.push((s0, 2));
            stack.push((s1, 0));
            stack.push((s1, 2));
        }
        Ok(())
    }
}

fn build_triangulation(config: &PointConfig) -> Result<Triangulation> {
    let pts = config.points();
    let scale = config.scale();
    let mut builder = Builder {
        pts,
        ghost: pts.len(),
        tris: vec![],
        eps2: GEOM_EPS * scale * scale,
        eps4: GEOM_EPS * scale * scale * scale * scale,
    };

    // Lexicographic insertion order: a later point can never lie on an edge
    // between two earlier points, so no on-edge case arises.
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| {
        (pts[i].re, pts[i].im)
            .partial_cmp(&(pts[j].re, pts[j].im))
            .unwrap()
    });
    let (a, b, c) = builder.seed(&order)?;
    builder.restore(vec![(0, 0), (0, 1), (0, 2)])?;
    for &p in &order {
        if p == a || p == b || p == c {
            continue;
        }
        let t = builder.locate(p)?;
        let stack = builder.split(t, p);
        builder.restore(stack)?;
    }

    freeze(config, &builder, scale)
}

fn freeze(config: &PointConfig, builder: &Builder, scale: f64) -> Result<Triangulation> {
    let ghost = builder.ghost;
    let mut faces: Vec<Face> = vec![];
    let mut hull_edges: Vec<(usize, usize)> = vec![];

    for tri in builder.tris.iter().filter(|t| t.alive) {
        if tri.v.contains(&ghost) {
            let k = tri.v.iter().position(|&v| v == ghost).unwrap();
            hull_edges.push((tri.v[(k + 1) % 3], tri.v[(k + 2) % 3]));
        } else {
            faces.push(Face { v: tri.v, kind: FaceKind::Interior });
        }
    }

    let mut outer_face = None;
    match config.convention() {
        Convention::FixedFace => {
            let mut hull_vertices: Vec<usize> = hull_edges.iter().map(|&(x, _)| x).collect();
            hull_vertices.sort_unstable();
            let mut fixed = config.fixed();
            fixed.sort_unstable();
            if hull_vertices.len() != 3 || hull_vertices != fixed {
                return Err(Error::InvalidInput(format!(
                    "fixed-face convention requires the three fixed vertices to be the convex \
                     hull; hull is {hull_vertices:?}"
                )));
            }
            // Hull edges are stored clockwise; chain them into the outer face.
            let (x, y) = hull_edges[0];
            let &(_, z) = hull_edges.iter().find(|&&(u, _)| u == y).unwrap();
            outer_face = Some(faces.len());
            faces.push(Face { v: [x, y, z], kind: FaceKind::Outer });
        }
        Convention::Infinity => {
            let inf = config.infinity().unwrap();
            debug_assert_eq!(inf, ghost);
            for &(x, y) in &hull_edges {
                faces.push(Face { v: [x, y, inf], kind: FaceKind::Infinite });
            }
        }
    }

    // Canonical edge list sorted by (min, max).
    let mut pair_set: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| (0..3).map(move |k| sorted_pair(f.v[k], f.v[(k + 1) % 3])))
        .collect();
    pair_set.sort_unstable();
    pair_set.dedup();
    let edge_ids: HashMap<(usize, usize), usize> = pair_set
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect();

    let mut edge_faces: Vec<Vec<FaceId>> = vec![vec![]; pair_set.len()];
    let mut face_edges: Vec<[EdgeId; 3]> = vec![[0; 3]; faces.len()];
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let e = edge_ids[&sorted_pair(f.v[(k + 1) % 3], f.v[(k + 2) % 3])];
            face_edges[fi][k] = e;
            edge_faces[e].push(fi);
        }
    }
    for (e, fs) in edge_faces.iter().enumerate() {
        if fs.len() != 2 {
            return Err(Error::DegenerateInput(format!(
                "edge {:?} is adjacent to {} faces; sphere closure broken",
                pair_set[e],
                fs.len()
            )));
        }
    }

    let edges: Vec<Edge> = pair_set
        .iter()
        .enumerate()
        .map(|(e, &(u, v))| Edge {
            v: [u, v],
            faces: [edge_faces[e][0], edge_faces[e][1]],
            theta: 0.0,
        })
        .collect();

    let mut geom = Vec::with_capacity(faces.len());
    for f in &faces {
        geom.push(match f.kind {
            FaceKind::Interior => Some(FaceGeom::new(
                config.point(f.v[0]),
                config.point(f.v[1]),
                config.point(f.v[2]),
                scale,
            )?),
            // Outer face: geometry of the counterclockwise reversal.
            FaceKind::Outer => Some(FaceGeom::new(
                config.point(f.v[0]),
                config.point(f.v[2]),
                config.point(f.v[1]),
                scale,
            )?),
            FaceKind::Infinite => None,
        });
    }

    let mut t = Triangulation {
        config: config.clone(),
        faces,
        edges,
        edge_ids,
        face_edges,
        vertex_edges: vec![],
        geom,
        outer_face,
        scale,
    };
    t.vertex_edges = compute_vertex_stars(&t, &hull_edges);
    compute_thetas(&mut t, &hull_edges);
    Ok(t)
}

fn sorted_pair(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Cyclically ordered incident edges per vertex: counterclockwise in the
/// plane around finite vertices (spokes inserted into the exterior gap),
/// clockwise hull order around the infinity vertex (the sphere's
/// trigonometric order there).
fn compute_vertex_stars(t: &Triangulation, hull_edges: &[(usize, usize)]) -> Vec<Vec<EdgeId>> {
    let cfg = t.config();
    let n = cfg.n_vertices();
    let mut stars: Vec<Vec<EdgeId>> = vec![vec![]; n];
    // hull successor in clockwise storage order: x -> y for (x, y)
    let mut cw_next: HashMap<usize, usize> = HashMap::new();
    for &(x, y) in hull_edges {
        cw_next.insert(x, y);
    }

    for v in 0..n {
        if cfg.is_infinite(v) {
            // Spokes in clockwise hull order, starting from the smallest
            // hull vertex for determinism.
            if let Some(&start) = cw_next.keys().min() {
                let mut u = start;
                loop {
                    stars[v].push(t.edge_between(u, v).unwrap());
                    u = cw_next[&u];
                    if u == start {
                        break;
                    }
                }
            }
            continue;
        }
        let zv = cfg.point(v);
        let mut finite: Vec<EdgeId> = vec![];
        let mut spoke: Option<EdgeId> = None;
        for (e, edge) in t.edges().iter().enumerate() {
            if !edge.v.contains(&v) {
                continue;
            }
            let w = edge.v[0] + edge.v[1] - v;
            if cfg.is_infinite(w) {
                spoke = Some(e);
            } else {
                finite.push(e);
            }
        }
        finite.sort_by(|&e1, &e2| {
            let a1 = angle_to(zv, cfg, t.edges()[e1].v, v);
            let a2 = angle_to(zv, cfg, t.edges()[e2].v, v);
            a1.partial_cmp(&a2).unwrap()
        });
        if let Some(s) = spoke {
            // The spoke fills the exterior gap between the clockwise-next
            // hull edge (v -> b) and the clockwise-previous one (a -> v):
            // rotate the counterclockwise order to start at (v -> b), then
            // append the spoke.
            let b = cw_next[&v];
            let eb = t.edge_between(v, b).unwrap();
            let pos = finite.iter().position(|&e| e == eb).unwrap();
            finite.rotate_left(pos);
            finite.push(s);
        }
        stars[v] = finite;
    }
    stars
}

fn angle_to(zv: Complex64, cfg: &PointConfig, ev: [usize; 2], v: usize) -> f64 {
    let w = ev[0] + ev[1] - v;
    (cfg.point(w) - zv).arg()
}

fn compute_thetas(t: &mut Triangulation, hull_edges: &[(usize, usize)]) {
    let cfg = t.config.clone();
    let mut cw_next: HashMap<usize, usize> = HashMap::new();
    let mut cw_prev: HashMap<usize, usize> = HashMap::new();
    for &(x, y) in hull_edges {
        cw_next.insert(x, y);
        cw_prev.insert(y, x);
    }
    for e in 0..t.edges.len() {
        let [u, v] = t.edges[e].v;
        let theta = if cfg.is_infinite(u) || cfg.is_infinite(v) {
            // Spoke: pi minus the interior hull angle at the finite endpoint.
            let w = if cfg.is_infinite(u) { v } else { u };
            // Clockwise storage order means the counterclockwise hull
            // neighbors of w are prev = cw_next[w], next = cw_prev[w].
            let a = cfg.point(cw_next[&w]);
            let b = cfg.point(cw_prev[&w]);
            let interior = corner_angle(b, cfg.point(w), a).abs();
            PI - interior
        } else {
            let [fa, fb] = t.edges[e].faces;
            PI - t.apex_angle(fa, e) - t.apex_angle(fb, e)
        };
        // Delaunay guarantees theta in [0, pi); clamp roundoff at the flip
        // boundary.
        t.edges[e].theta = theta.clamp(0.0, PI - f64::EPSILON);
    }
}

// ---------------------------------------------------------------------------
// Triangulation JSON export.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct TriangulationExport {
    pub schema: String,
    pub points: Vec<[f64; 2]>,
    pub fixed: [usize; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infinity: Option<usize>,
    pub faces: Vec<FaceExport>,
    pub edges: Vec<EdgeExport>,
}

#[derive(Serialize, Deserialize)]
pub struct FaceExport {
    pub v: [usize; 3],
    pub kind: FaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circumcenter: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct EdgeExport {
    pub v: [usize; 2],
    pub theta: f64,
}

impl TriangulationExport {
    pub fn from_triangulation(t: &Triangulation) -> Self {
        TriangulationExport {
            schema: "delmeasure/triangulation/v1".into(),
            points: t.config.points.iter().map(|z| [z.re, z.im]).collect(),
            fixed: t.config.fixed,
            infinity: t.config.infinity,
            faces: t
                .faces
                .iter()
                .enumerate()
                .map(|(f, face)| {
                    let g = t.geom[f].as_ref();
                    FaceExport {
                        v: face.v,
                        kind: face.kind,
                        circumcenter: g.map(|g| [g.circumcenter.re, g.circumcenter.im]),
                        radius: g.map(|g| g.radius),
                        area: g.map(|g| g.area),
                    }
                })
                .collect(),
            edges: t
                .edges
                .iter()
                .map(|e| EdgeExport { v: e.v, theta: e.theta })
                .collect(),
        }
    }
}
