//! Edge bases and triangle-rooted spanning 3-trees.
//!
//! A basis is a set of 2N edges whose angles are independent coordinates on
//! the flat stratum; equivalently its complement is a cycle-rooted spanning
//! tree with an odd cycle.  The canonical basis takes the cycle to be the
//! boundary of a chosen face and the basis to be the primal edges crossed by
//! a spanning tree of the remaining dual graph.
//!
//! A triangle-rooted spanning 3-tree partitions the non-root edges into
//! three disjoint N-edge forests, each of which closes to a cycle-rooted
//! spanning tree over the root triangle.  They are enumerated by
//! backtracking over per-vertex outgoing-edge choices, mirroring the arrow
//! encoding of the determinant expansion, which also makes the permutation
//! parity of the sign factor directly available.

use crate::error::{Error, Result};
use crate::linalg::IMat;
use crate::mesh::{EdgeId, FaceId, Triangulation, VertexId};
use num_bigint::BigInt;
use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{HashMap, HashSet, VecDeque};

/// A basis of 2N independent edges with its complementary odd cycle-rooted
/// spanning tree.
#[derive(Clone, Debug)]
pub struct EdgeBasis {
    /// 2N basis edges, ascending.
    pub basis: Vec<EdgeId>,
    /// N+3 complement edges, ascending.
    pub complement: Vec<EdgeId>,
    /// The unique (odd) cycle of the complement.
    pub cycle: Vec<EdgeId>,
}

/// Canonical basis for a root face: the complement's cycle is the boundary
/// of `f0`, and the basis is dual to a spanning tree of the dual graph with
/// `f0` removed.
pub fn find_edge_basis(t: &Triangulation, f0: FaceId) -> Result<EdgeBasis> {
    let n_faces = t.faces().len();
    let mut visited = vec![false; n_faces];
    let mut in_basis = vec![false; t.edges().len()];
    visited[f0] = true;
    // BFS over faces != f0; tree arcs cross primal edges into the basis.
    let start = (0..n_faces).find(|&f| f != f0).ok_or_else(|| {
        Error::InvalidInput("triangulation has a single face".into())
    })?;
    visited[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(f) = queue.pop_front() {
        for &e in &t.face_edge_ids(f) {
            let [fa, fb] = t.edges()[e].faces;
            let g = if fa == f { fb } else { fa };
            if g == f0 || visited[g] {
                continue;
            }
            visited[g] = true;
            in_basis[e] = true;
            queue.push_back(g);
        }
    }
    if !visited.iter().all(|&v| v) {
        return Err(Error::InvalidInput("dual graph is disconnected".into()));
    }
    let basis: Vec<EdgeId> = (0..t.edges().len()).filter(|&e| in_basis[e]).collect();
    let complement: Vec<EdgeId> = (0..t.edges().len()).filter(|&e| !in_basis[e]).collect();
    let cycle = complement_cycle(t, &complement)?;
    Ok(EdgeBasis {
        basis,
        complement,
        cycle,
    })
}

/// Random valid basis: a random spanning tree plus a random chord closing an
/// odd cycle.  Used by the basis-independence tests.
pub fn random_edge_basis(t: &Triangulation, rng: &mut impl Rng) -> Result<EdgeBasis> {
    let n_edges = t.edges().len();
    let n_vertices = t.n_vertices();
    for _attempt in 0..400 {
        let mut order: Vec<EdgeId> = (0..n_edges).collect();
        order.shuffle(rng);
        let mut uf = UnionFind::new(n_vertices);
        let mut tree: Vec<EdgeId> = vec![];
        let mut rest: Vec<EdgeId> = vec![];
        for &e in &order {
            let [u, v] = t.edges()[e].v;
            if uf.union(u, v) {
                tree.push(e);
            } else {
                rest.push(e);
            }
        }
        // Chords closing an odd cycle: try them in the shuffled order.
        for &chord in &rest {
            let mut complement = tree.clone();
            complement.push(chord);
            complement.sort_unstable();
            if let Ok(cycle) = complement_cycle(t, &complement) {
                if cycle.len() % 2 == 1 {
                    let compl_set: HashSet<EdgeId> = complement.iter().copied().collect();
                    let basis: Vec<EdgeId> =
                        (0..n_edges).filter(|e| !compl_set.contains(e)).collect();
                    return Ok(EdgeBasis {
                        basis,
                        complement,
                        cycle,
                    });
                }
            }
        }
    }
    Err(Error::InvalidInput(
        "no odd-cycle basis found by random search".into(),
    ))
}

/// The unique cycle of a connected spanning subgraph with as many edges as
/// vertices, by repeatedly stripping leaves.
fn complement_cycle(t: &Triangulation, complement: &[EdgeId]) -> Result<Vec<EdgeId>> {
    let n = t.n_vertices();
    let mut degree = vec![0usize; n];
    let mut incident: Vec<Vec<EdgeId>> = vec![vec![]; n];
    for &e in complement {
        for &v in &t.edges()[e].v {
            degree[v] += 1;
            incident[v].push(e);
        }
    }
    if degree.iter().any(|&d| d == 0) {
        return Err(Error::InvalidInput("complement does not span".into()));
    }
    let mut removed_edge = vec![false; t.edges().len()];
    let mut queue: VecDeque<VertexId> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    while let Some(v) = queue.pop_front() {
        if degree[v] != 1 {
            continue;
        }
        let &e = incident[v]
            .iter()
            .find(|&&e| !removed_edge[e])
            .expect("degree-1 vertex with no live edge");
        removed_edge[e] = true;
        for &w in &t.edges()[e].v {
            degree[w] -= 1;
            if degree[w] == 1 {
                queue.push_back(w);
            }
        }
    }
    let cycle: Vec<EdgeId> = complement
        .iter()
        .copied()
        .filter(|&e| !removed_edge[e])
        .collect();
    if cycle.is_empty() || cycle.iter().any(|&e| degree[t.edges()[e].v[0]] != 2) {
        return Err(Error::InvalidInput(
            "complement is not a one-cycle spanning subgraph".into(),
        ));
    }
    Ok(cycle)
}

/// Structural validation of a basis plus its exact determinant signature.
#[derive(Debug, Clone)]
pub struct BasisCheck {
    pub det_r_complement: BigInt,
    pub cycle_len: usize,
    /// Components of the dual graph restricted to basis-crossing arcs;
    /// an isolated face counts as a trivial tree.
    pub dual_components: usize,
    pub dual_is_forest: bool,
}

pub fn check_basis(t: &Triangulation, basis: &EdgeBasis) -> Result<BasisCheck> {
    let r = crate::operators::incidence_r(t);
    let all: Vec<usize> = (0..t.n_vertices()).collect();
    let det = r.select(&all, &basis.complement).det();
    if det.abs() != BigInt::from(2) {
        return Err(Error::InvalidInput(format!(
            "complement determinant {det} is not +-2"
        )));
    }
    // Dual forest: faces as nodes, basis edges as arcs.
    let n_faces = t.faces().len();
    let mut uf = UnionFind::new(n_faces);
    let mut acyclic = true;
    for &e in &basis.basis {
        let [fa, fb] = t.edges()[e].faces;
        if !uf.union(fa, fb) {
            acyclic = false;
        }
    }
    let mut roots: HashSet<usize> = HashSet::new();
    for f in 0..n_faces {
        roots.insert(uf.find(f));
    }
    Ok(BasisCheck {
        det_r_complement: det,
        cycle_len: basis.cycle.len(),
        dual_components: roots.len(),
        dual_is_forest: acyclic,
    })
}

// ---------------------------------------------------------------------------
// Triangle-rooted spanning 3-trees.
// ---------------------------------------------------------------------------

/// One triangle-rooted spanning 3-tree: two oriented forests (arrows point
/// towards the root triangle) plus the implied third set and the sign
/// factor of the determinant expansion.
#[derive(Clone, Debug)]
pub struct SpanningThreeTree {
    /// First oriented forest: `(vertex, head)` per free vertex, ascending.
    pub tree_a: Vec<(VertexId, VertexId)>,
    /// Second oriented forest.
    pub tree_b: Vec<(VertexId, VertexId)>,
    /// Remaining edges (unoriented) outside the root triangle.
    pub tree_c: Vec<EdgeId>,
    /// Sign factor; `+-1`.
    pub epsilon: i64,
}

/// Guard for the exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 8;

/// Enumerates every triangle-rooted spanning 3-tree of `t` rooted at the
/// face formed by the three fixed vertices, with signs relative to the
/// canonical basis of that face.
pub fn enumerate_3trees(t: &Triangulation, triangle: FaceId) -> Result<Vec<SpanningThreeTree>> {
    let n = t.n_free();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let roots = t.faces()[triangle].v;
    let mut fixed_sorted = t.config().fixed();
    fixed_sorted.sort_unstable();
    let mut roots_sorted = roots;
    roots_sorted.sort_unstable();
    if fixed_sorted != roots_sorted {
        return Err(Error::InvalidInput(
            "root triangle must be the face of the three fixed vertices".into(),
        ));
    }
    let triangle_edges: HashSet<EdgeId> = t.face_edge_ids(triangle).iter().copied().collect();
    let free: Vec<VertexId> = t.config().free_vertices();
    let index_of: HashMap<VertexId, usize> =
        free.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    // Incident candidate arrows per free vertex (excluding root-triangle
    // edges, which never carry arrows).
    let mut candidates: Vec<Vec<(EdgeId, VertexId)>> = vec![vec![]; free.len()];
    for (e, edge) in t.edges().iter().enumerate() {
        if triangle_edges.contains(&e) {
            continue;
        }
        let [u, v] = edge.v;
        if let Some(&i) = index_of.get(&u) {
            candidates[i].push((e, v));
        }
        if let Some(&i) = index_of.get(&v) {
            candidates[i].push((e, u));
        }
    }

    let e_matrix = crate::operators::edge_pair_e(t);
    let basis = find_edge_basis(t, triangle)?;

    let mut ctx = Enumeration {
        t,
        free: &free,
        index_of: &index_of,
        candidates: &candidates,
        triangle_edges: &triangle_edges,
        e_matrix: &e_matrix,
        basis: &basis,
        assign: vec![None; 2 * free.len()],
        used: HashSet::new(),
        out: vec![],
    };
    ctx.descend(0)?;
    Ok(ctx.out)
}

struct Enumeration<'a> {
    t: &'a Triangulation,
    free: &'a [VertexId],
    index_of: &'a HashMap<VertexId, usize>,
    candidates: &'a [Vec<(EdgeId, VertexId)>],
    triangle_edges: &'a HashSet<EdgeId>,
    e_matrix: &'a IMat,
    basis: &'a EdgeBasis,
    /// Slots 0..N hold the first forest's arrows, N..2N the second's.
    assign: Vec<Option<(EdgeId, VertexId)>>,
    used: HashSet<EdgeId>,
    out: Vec<SpanningThreeTree>,
}

impl Enumeration<'_> {
    /// Whether following assigned arrows of the forest containing `slot`
    /// from `start` avoids closing a cycle through `origin`.
    fn chain_ok(&self, slot_base: usize, start: VertexId, origin: VertexId) -> bool {
        let mut cur = start;
        loop {
            if cur == origin {
                return false;
            }
            match self.index_of.get(&cur) {
                None => return true, // reached a fixed vertex
                Some(&i) => match self.assign[slot_base + i] {
                    None => return true,
                    Some((_, head)) => cur = head,
                },
            }
        }
    }

    fn descend(&mut self, pos: usize) -> Result<()> {
        let n = self.free.len();
        if pos == 2 * n {
            self.emit()?;
            return Ok(());
        }
        let vertex_pos = pos % n;
        let slot_base = (pos / n) * n;
        for k in 0..self.candidates[vertex_pos].len() {
            let (e, head) = self.candidates[vertex_pos][k];
            if self.used.contains(&e) {
                continue;
            }
            self.assign[pos] = Some((e, head));
            if !self.chain_ok(slot_base, head, self.free[vertex_pos]) {
                self.assign[pos] = None;
                continue;
            }
            self.used.insert(e);
            self.descend(pos + 1)?;
            self.used.remove(&e);
            self.assign[pos] = None;
        }
        Ok(())
    }

    /// Both forests are fixed; keep the configuration if the remaining
    /// edges close to a third triangle-rooted forest.
    fn emit(&mut self) -> Result<()> {
        let n = self.free.len();
        let rest: Vec<EdgeId> = (0..self.t.edges().len())
            .filter(|e| !self.triangle_edges.contains(e) && !self.used.contains(e))
            .collect();
        if rest.len() != n {
            return Ok(());
        }
        let mut uf = UnionFind::new(self.t.n_vertices());
        for &e in &rest {
            let [u, v] = self.t.edges()[e].v;
            if !uf.union(u, v) {
                return Ok(()); // cycle in the third set
            }
        }
        // With N acyclic edges, forbidding paths between fixed vertices
        // forces each component to hold exactly one of them.
        let fixed = self.t.config().fixed();
        if uf.find(fixed[0]) == uf.find(fixed[1])
            || uf.find(fixed[0]) == uf.find(fixed[2])
            || uf.find(fixed[1]) == uf.find(fixed[2])
        {
            return Ok(());
        }
        let sigma = &self.assign[0..n];
        let sigma_bar = &self.assign[n..2 * n];
        let tree_a: Vec<(VertexId, VertexId)> = self
            .free
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, sigma[i].unwrap().1))
            .collect();
        let tree_b: Vec<(VertexId, VertexId)> = self
            .free
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, sigma_bar[i].unwrap().1))
            .collect();
        let epsilon = sign_epsilon_from_parts(sigma, sigma_bar, self.e_matrix, self.basis)?;
        self.out.push(SpanningThreeTree {
            tree_a,
            tree_b,
            tree_c: rest,
            epsilon,
        });
        Ok(())
    }
}

/// Sign factor of the determinant expansion: the parity of the arrow
/// bijection times the exact integer determinant of the `E` submatrix over
/// `(I union I') x basis`.
fn sign_epsilon_from_parts(
    sigma: &[Option<(EdgeId, VertexId)>],
    sigma_bar: &[Option<(EdgeId, VertexId)>],
    e_matrix: &IMat,
    basis: &EdgeBasis,
) -> Result<i64> {
    let edges_a: Vec<EdgeId> = sigma.iter().map(|s| s.unwrap().0).collect();
    let edges_b: Vec<EdgeId> = sigma_bar.iter().map(|s| s.unwrap().0).collect();
    let mut all: Vec<EdgeId> = edges_a.iter().chain(edges_b.iter()).copied().collect();
    all.sort_unstable();
    let col_of: HashMap<EdgeId, usize> =
        all.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    // Row i (0..N for sigma, N..2N for sigma-bar) maps to the sorted column
    // of its edge; the parity of that permutation.
    let perm: Vec<usize> = edges_a
        .iter()
        .chain(edges_b.iter())
        .map(|e| col_of[e])
        .collect();
    let parity = permutation_sign(&perm);
    let det = e_matrix.select(&all, &basis.basis).det();
    if det == BigInt::from(0) {
        return Err(Error::SingularSubmatrix);
    }
    if det.abs() != BigInt::from(1) {
        return Err(Error::InvalidInput(format!(
            "E submatrix determinant {det}, expected +-1"
        )));
    }
    let det_sign = if det > BigInt::from(0) { 1 } else { -1 };
    Ok(parity * det_sign)
}

/// Sign factor of one 3-tree with respect to an arbitrary basis.
pub fn sign_epsilon(
    f3: &SpanningThreeTree,
    basis: &EdgeBasis,
    t: &Triangulation,
    e_matrix: &IMat,
) -> Result<i64> {
    let to_parts = |pairs: &[(VertexId, VertexId)]| -> Vec<Option<(EdgeId, VertexId)>> {
        pairs
            .iter()
            .map(|&(v, w)| Some((t.edge_between(v, w).expect("tree edge"), w)))
            .collect()
    };
    let sigma = to_parts(&f3.tree_a);
    let sigma_bar = to_parts(&f3.tree_b);
    sign_epsilon_from_parts(&sigma, &sigma_bar, e_matrix, basis)
}

fn permutation_sign(perm: &[usize]) -> i64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i64;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = perm[cur];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Perfect matchings of the line graph of the dual forest crossed by a
/// basis: pairs of basis edges sharing a face.  The determinant argument
/// for `det E0 = 1` requires exactly one.
pub fn dual_forest_matchings(t: &Triangulation, basis: &EdgeBasis) -> usize {
    let m = basis.basis.len();
    // adjacency: basis edges sharing an adjacent face
    let mut adj = vec![vec![false; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let fi = t.edges()[basis.basis[i]].faces;
            let fj = t.edges()[basis.basis[j]].faces;
            if fi.iter().any(|f| fj.contains(f)) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    let mut matched = vec![false; m];
    fn count(adj: &[Vec<bool>], matched: &mut Vec<bool>) -> usize {
        let first = match matched.iter().position(|&m| !m) {
            None => return 1,
            Some(f) => f,
        };
        matched[first] = true;
        let mut total = 0;
        for j in (first + 1)..matched.len() {
            if !matched[j] && adj[first][j] {
                matched[j] = true;
                total += count(adj, matched);
                matched[j] = false;
            }
        }
        matched[first] = false;
        total
    }
    count(&adj, &mut matched)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
