use serde::{Deserialize, Serialize};

use super::distance::DistanceEstimate;
use crate::error::{Error, Result};
use crate::util::DisjointSet;

const NONE: usize = usize::MAX;

/// Binary merge tree over leaves `0..n`. Merge node `i` has id `n + i` and is
/// created by the `i`-th merge, so children always precede their parent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n_leaves: usize,
    children: Vec<(usize, usize)>,
    height: Vec<f64>,
    parent: Vec<usize>,
}

impl Dendrogram {
    /// Builds a dendrogram from merges `(child_a, child_b, height)`.
    ///
    /// Each node may be merged once, and heights must be nondecreasing
    /// toward the root.
    pub fn from_merges(n_leaves: usize, merges: &[(usize, usize, f64)]) -> Result<Self> {
        let total = n_leaves + merges.len();
        let mut height = vec![0.0; total];
        let mut parent = vec![NONE; total];
        let mut children = Vec::with_capacity(merges.len());
        for (i, &(a, b, h)) in merges.iter().enumerate() {
            let id = n_leaves + i;
            if a >= id || b >= id || a == b {
                return Err(Error::InvalidParameter(format!("merge {i} has invalid children ({a}, {b})")));
            }
            if parent[a] != NONE || parent[b] != NONE {
                return Err(Error::InvalidParameter(format!("merge {i} reuses an already merged node")));
            }
            if !(h >= height[a] && h >= height[b]) || !h.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "merge {i} at height {h} is below one of its children"
                )));
            }
            parent[a] = id;
            parent[b] = id;
            height[id] = h;
            children.push((a, b));
        }
        Ok(Self { n_leaves, children, height, parent })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn n_nodes(&self) -> usize {
        self.height.len()
    }

    pub fn merges(&self) -> &[(usize, usize)] {
        &self.children
    }

    pub fn height(&self, node: usize) -> f64 {
        self.height[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        Some(self.parent[node]).filter(|&p| p != NONE)
    }

    /// Lowest common merge node of two leaves (the leaf itself when equal),
    /// or `None` if they sit in different trees of an incomplete forest.
    pub fn lca(&self, u: usize, v: usize) -> Option<usize> {
        let (mut a, mut b) = (u, v);
        // Node ids increase toward the root, so always lift the smaller one.
        while a != b {
            if a < b {
                a = self.parent(a)?;
            } else {
                b = self.parent(b)?;
            }
        }
        Some(a)
    }

    /// Induced ultrametric value `e(u, v)`; infinite across disconnected parts.
    pub fn e(&self, u: usize, v: usize) -> f64 {
        self.lca(u, v).map_or(f64::INFINITY, |w| self.height[w])
    }

    /// Full matrix of `e`, filled in O(n^2) by replaying the merges.
    pub fn to_matrix(&self) -> DistanceEstimate {
        let n = self.n_leaves;
        let mut data = vec![f64::INFINITY; n * n];
        let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        members.resize(self.n_nodes(), Vec::new());
        for (i, &(a, b)) in self.children.iter().enumerate() {
            let h = self.height[n + i];
            let (left, right) = (std::mem::take(&mut members[a]), std::mem::take(&mut members[b]));
            for &x in &left {
                for &y in &right {
                    data[x * n + y] = h;
                    data[y * n + x] = h;
                }
            }
            let mut merged = left;
            merged.extend(right);
            members[n + i] = merged;
        }
        DistanceEstimate::new(n, data).expect("dendrogram heights are valid distances")
    }

    /// Copy with the height of merge node `node` raised by `eta`, without
    /// revalidating monotonicity. Used to probe maximality.
    pub fn perturbed(&self, node: usize, eta: f64) -> Self {
        let mut out = self.clone();
        out.height[node] += eta;
        out
    }
}

/// Minimum spanning tree of a finite dissimilarity by dense Prim. Ties go to
/// the smaller `(min, max)` pair. Returns `(u, v, weight)` edges.
pub fn min_spanning_tree(a: &DistanceEstimate) -> Vec<(usize, usize, f64)> {
    let n = a.n();
    if n < 2 {
        return Vec::new();
    }
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let before = |w1: f64, p1, w2: f64, p2| w1 < w2 || (w1 == w2 && p1 < p2);
    let mut in_tree = vec![false; n];
    let mut best_w = a.row(0).to_vec();
    let mut best_to = vec![0usize; n];
    in_tree[0] = true;
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut pick = NONE;
        for v in 0..n {
            if !in_tree[v]
                && (pick == NONE
                    || before(best_w[v], key(v, best_to[v]), best_w[pick], key(pick, best_to[pick])))
            {
                pick = v;
            }
        }
        in_tree[pick] = true;
        let (u, v) = key(pick, best_to[pick]);
        edges.push((u, v, best_w[pick]));
        let row = a.row(pick);
        for v in 0..n {
            if !in_tree[v] && before(row[v], key(v, pick), best_w[v], key(v, best_to[v])) {
                best_w[v] = row[v];
                best_to[v] = pick;
            }
        }
    }
    edges
}

/// Largest ultrametric below `a`: single-linkage clustering along the
/// minimum spanning tree of `a`.
pub fn subdominant_ultrametric(a: &DistanceEstimate) -> Result<Dendrogram> {
    if !a.is_finite() {
        return Err(Error::InvalidParameter("subdominant ultrametric needs finite entries".into()));
    }
    let n = a.n();
    let mut mst = min_spanning_tree(a);
    mst.sort_by(|x, y| x.2.total_cmp(&y.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    let mut dsu = DisjointSet::new(n);
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for (u, v, w) in mst {
        let (ru, rv) = (dsu.find(u), dsu.find(v));
        let (cu, cv) = (node_of[ru], node_of[rv]);
        dsu.union(ru, rv);
        node_of[dsu.find(ru)] = n + merges.len();
        merges.push((cu, cv, w));
    }
    Dendrogram::from_merges(n, &merges)
}
