//! Trees with latent (Steiner) vertices, the ultrametric-minus-centroid
//! realization, and Steiner-vertex removal.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use super::distance::DistanceEstimate;
use super::ultrametric::Dendrogram;
use crate::error::{Error, Result};
use crate::model::TreeTopology;
use crate::util::DisjointSet;

/// Edge-weighted tree whose vertices `0..n_labeled` are observed and whose
/// remaining vertices are Steiner vertices. The root is a labeled vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct SteinerTree {
    n_labeled: usize,
    n_vertices: usize,
    edges: Vec<(usize, usize, f64)>,
    root: usize,
}

impl SteinerTree {
    pub fn new(n_labeled: usize, n_vertices: usize, edges: Vec<(usize, usize, f64)>, root: usize) -> Result<Self> {
        if n_labeled == 0 || n_labeled > n_vertices {
            return Err(Error::InvalidTree(format!(
                "need 1 <= n_labeled <= n_vertices, got {n_labeled} and {n_vertices}"
            )));
        }
        if root >= n_labeled {
            return Err(Error::InvalidTree(format!("root {root} is not a labeled vertex")));
        }
        if edges.len() + 1 != n_vertices {
            return Err(Error::InvalidTree(format!(
                "expected {} edges for {} vertices, got {}",
                n_vertices - 1,
                n_vertices,
                edges.len()
            )));
        }
        let mut dsu = DisjointSet::new(n_vertices);
        for &(a, b, len) in &edges {
            if a >= n_vertices || b >= n_vertices || a == b {
                return Err(Error::InvalidTree(format!("invalid edge ({a}, {b})")));
            }
            if !(len >= 0.0) || !len.is_finite() {
                return Err(Error::InvalidTree(format!("edge ({a}, {b}) has invalid length {len}")));
            }
            if !dsu.union(a, b) {
                return Err(Error::InvalidTree(format!("edge ({a}, {b}) closes a cycle")));
            }
        }
        Ok(Self { n_labeled, n_vertices, edges, root })
    }

    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_steiner(&self) -> usize {
        self.n_vertices - self.n_labeled
    }

    pub fn is_labeled(&self, v: usize) -> bool {
        v < self.n_labeled
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Adjacency lists of `(neighbor, length)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(a, b, len) in &self.edges {
            adj[a].push((b, len));
            adj[b].push((a, len));
        }
        adj
    }

    /// Tree path lengths from `src` to every vertex.
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        tree_distances_from(&self.adjacency(), src)
    }

    /// Path lengths between labeled vertices.
    pub fn labeled_distances(&self) -> DistanceEstimate {
        let adj = self.adjacency();
        let n = self.n_labeled;
        let mut data = vec![0.0; n * n];
        for u in 0..n {
            let d = tree_distances_from(&adj, u);
            data[u * n..(u + 1) * n].copy_from_slice(&d[..n]);
        }
        symmetrize_exact(n, &mut data);
        DistanceEstimate::new(n, data).expect("tree distances are valid")
    }
}

/// Floating-point sums along a path can differ in the last bit depending on
/// the direction of summation; keep the upper-triangle value.
fn symmetrize_exact(n: usize, data: &mut [f64]) {
    crate::util::mirror_upper(n, data);
}

fn tree_distances_from(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[src] = 0.0;
    let mut stack = vec![src];
    while let Some(x) = stack.pop() {
        for &(y, len) in &adj[x] {
            if dist[y].is_infinite() {
                dist[y] = dist[x] + len;
                stack.push(y);
            }
        }
    }
    dist
}

/// Tree on labeled vertices with nonnegative edge lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTree {
    pub topology: TreeTopology,
    pub lengths: Vec<f64>,
}

impl WeightedTree {
    pub fn new(topology: TreeTopology, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != topology.edges().len() {
            return Err(Error::DimensionMismatch { expected: topology.edges().len(), got: lengths.len() });
        }
        if let Some(l) = lengths.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid edge length {l}")));
        }
        Ok(Self { topology, lengths })
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    /// All-pairs path lengths in O(n^2).
    pub fn distances(&self) -> DistanceEstimate {
        let n = self.n();
        let mut adj = vec![Vec::new(); n];
        for (&(u, v), &len) in self.topology.edges().iter().zip(&self.lengths) {
            adj[u].push((v, len));
            adj[v].push((u, len));
        }
        let mut data = vec![0.0; n * n];
        for u in 0..n {
            data[u * n..(u + 1) * n].copy_from_slice(&tree_distances_from(&adj, u));
        }
        symmetrize_exact(n, &mut data);
        DistanceEstimate::new(n, data).expect("tree distances are valid")
    }
}

/// Per-vertex lengths `ell_u = D_max - dist(rho, u)` of a centroid metric
/// `c(u, v) = ell_u + ell_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroidMetric {
    pub ell: Vec<f64>,
    pub d_max: f64,
}

impl CentroidMetric {
    /// Builds the centroid metric from finite distances to the root `rho`.
    pub fn from_root_distances(dist: &[f64], rho: usize) -> Result<Self> {
        if let Some(v) = dist.iter().position(|d| !d.is_finite()) {
            return Err(Error::Unreachable { vertex: v, root: rho });
        }
        let d_max = dist.iter().copied().fold(0.0, f64::max);
        Ok(Self { ell: dist.iter().map(|d| d_max - d).collect(), d_max })
    }

    pub fn c(&self, u: usize, v: usize) -> f64 {
        self.ell[u] + self.ell[v]
    }
}

/// Negative leaf lengths smaller than this are treated as rounding.
const CLAMP_TOL: f64 = 1e-9;

/// Result of realizing `e - c` as a Steiner tree.
#[derive(Clone, Debug)]
pub struct UltraMinusCentroid {
    pub tree: SteinerTree,
    /// Leaf edges whose length `h/2 - ell_u` came out below `-1e-9` and was set to 0.
    pub leaf_clamps: usize,
}

/// Realizes `d(u, v) = e(u, v) - ell_u - ell_v` as a tree. Every merge node
/// becomes a Steiner vertex (same id as in the dendrogram), merge-to-merge
/// edges get half the height difference, and leaf `u` hangs from its parent
/// merge at `h/2 - ell_u`.
pub fn ultra_minus_centroid(e: &Dendrogram, c: &CentroidMetric, rho: usize) -> Result<UltraMinusCentroid> {
    let n = e.n_leaves();
    if c.ell.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.ell.len() });
    }
    if n > 0 && e.n_nodes() != 2 * n - 1 {
        return Err(Error::InvalidParameter("dendrogram does not join all leaves".into()));
    }
    let mut edges = Vec::with_capacity(e.n_nodes().saturating_sub(1));
    let mut leaf_clamps = 0;
    for node in 0..e.n_nodes() {
        let Some(p) = e.parent(node) else { continue };
        let len = if node < n {
            let raw = 0.5 * e.height(p) - c.ell[node];
            if raw < 0.0 {
                // Rounding noise is not a hypothesis violation.
                if raw < -CLAMP_TOL {
                    leaf_clamps += 1;
                    log::debug!("leaf {node}: clamped negative edge length {raw}");
                }
                0.0
            } else {
                raw
            }
        } else {
            0.5 * (e.height(p) - e.height(node))
        };
        edges.push((node, p, len));
    }
    let tree = SteinerTree::new(n, e.n_nodes(), edges, rho)?;
    Ok(UltraMinusCentroid { tree, leaf_clamps })
}

/// Lexicographic search key: (distance, hops, source label).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64, usize, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1)).then(self.2.cmp(&other.2))
    }
}

/// Multi-source search from all labeled vertices; returns the best key per vertex.
fn nearest_labeled(t: &SteinerTree, adj: &[Vec<(usize, f64)>]) -> Vec<Key> {
    let mut best = vec![Key(f64::INFINITY, usize::MAX, usize::MAX); t.n_vertices()];
    let mut heap = BinaryHeap::new();
    for w in 0..t.n_labeled() {
        best[w] = Key(0.0, 0, w);
        heap.push(Reverse((best[w], w)));
    }
    while let Some(Reverse((k, x))) = heap.pop() {
        if k != best[x] {
            continue;
        }
        for &(y, len) in &adj[x] {
            let cand = Key(k.0 + len, k.1 + 1, k.2);
            if cand < best[y] {
                best[y] = cand;
                heap.push(Reverse((cand, y)));
            }
        }
    }
    best
}

/// Largest distance from a Steiner vertex to its nearest labeled vertex; 0
/// without Steiner vertices.
pub fn c_radius(t: &SteinerTree) -> f64 {
    let adj = t.adjacency();
    let best = nearest_labeled(t, &adj);
    best[t.n_labeled()..].iter().map(|k| k.0).fold(0.0, f64::max)
}

/// Output of [`desteinerize`].
#[derive(Clone, Debug)]
pub struct Desteinerized {
    pub tree: WeightedTree,
    /// Input after deleting degree-1 and splicing degree-2 Steiner vertices.
    pub pruned: SteinerTree,
    /// [`c_radius`] of the pruned tree.
    pub c_radius: f64,
}

/// Deletes Steiner leaves and splices degree-2 Steiner vertices until none
/// remain. Labeled-pair distances are unchanged.
pub fn prune_steiner(t: &SteinerTree) -> SteinerTree {
    let nv = t.n_vertices();
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); nv];
    for &(a, b, len) in t.edges() {
        adj[a].insert(b, len);
        adj[b].insert(a, len);
    }
    let mut alive = vec![true; nv];
    let mut queue: VecDeque<usize> = (t.n_labeled()..nv).filter(|&s| adj[s].len() <= 2).collect();
    while let Some(s) = queue.pop_front() {
        if !alive[s] {
            continue;
        }
        let nbrs: Vec<(usize, f64)> = adj[s].iter().map(|(&k, &v)| (k, v)).collect();
        match nbrs.as_slice() {
            [] => {}
            [(a, _)] => {
                adj[*a].remove(&s);
                adj[s].clear();
                alive[s] = false;
                if *a >= t.n_labeled() && adj[*a].len() <= 2 {
                    queue.push_back(*a);
                }
            }
            [(a, la), (b, lb)] => {
                adj[*a].remove(&s);
                adj[*b].remove(&s);
                adj[*a].insert(*b, la + lb);
                adj[*b].insert(*a, la + lb);
                adj[s].clear();
                alive[s] = false;
            }
            _ => {}
        }
    }
    // Single Steiner vertex with no edges cannot occur: some labeled vertex exists.
    let mut new_id = vec![usize::MAX; nv];
    let mut next = t.n_labeled();
    for v in 0..nv {
        if v < t.n_labeled() {
            new_id[v] = v;
        } else if alive[v] {
            new_id[v] = next;
            next += 1;
        }
    }
    let mut edges = Vec::with_capacity(next.saturating_sub(1));
    for a in 0..nv {
        for (&b, &len) in &adj[a] {
            if a < b {
                edges.push((new_id[a], new_id[b], len));
            }
        }
    }
    SteinerTree::new(t.n_labeled(), next, edges, t.root()).expect("pruning preserves the tree")
}

/// Removes Steiner vertices: prune, map each vertex to its nearest labeled
/// vertex (ties by hop count, then label), contract the resulting fibers and
/// assign lengths outward from the root as `max(0, dhat(rho, v) - d'(rho, u))`.
pub fn desteinerize(t: &SteinerTree) -> Result<Desteinerized> {
    let pruned = prune_steiner(t);
    let adj = pruned.adjacency();
    let best = nearest_labeled(&pruned, &adj);
    let c_rad = best[pruned.n_labeled()..].iter().map(|k| k.0).fold(0.0, f64::max);
    let n = pruned.n_labeled();

    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for &(a, b, _) in pruned.edges() {
        let (fa, fb) = (best[a].2, best[b].2);
        if fa != fb {
            edges.push((fa.min(fb), fa.max(fb)));
        }
    }
    // Fibers are connected (each vertex's search predecessor shares its label),
    // so contraction yields exactly a tree; TreeTopology::new re-checks it.
    let topology = TreeTopology::new(n, edges).map_err(|e| {
        Error::InvalidTree(format!("contracted fibers do not form a tree: {e}"))
    })?;

    let dhat_root = tree_distances_from(&adj, pruned.root());
    let tadj = topology.adjacency();
    let mut lengths = vec![0.0; n.saturating_sub(1)];
    let mut dprime = vec![f64::NAN; n];
    dprime[pruned.root()] = 0.0;
    let mut queue = VecDeque::from([pruned.root()]);
    while let Some(u) = queue.pop_front() {
        for &(v, e) in &tadj[u] {
            if dprime[v].is_nan() {
                let len = (dhat_root[v] - dprime[u]).max(0.0);
                lengths[e] = len;
                dprime[v] = dprime[u] + len;
                queue.push_back(v);
            }
        }
    }
    Ok(Desteinerized { tree: WeightedTree::new(topology, lengths)?, pruned, c_radius: c_rad })
}
