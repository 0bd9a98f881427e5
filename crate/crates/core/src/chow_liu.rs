//! Chow-Liu maximum spanning tree and the weak-edge block decomposition used
//! to stitch together per-block solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CorrelationMatrix, TreeIsingModel, TreeTopology};
use crate::util::DisjointSet;

/// Tree edges whose estimated correlation is at most this value are "weak"
/// and split the vertex set into blocks.
pub const WEAK_EDGE_THRESHOLD: f64 = 0.1;

/// `true` when edge `(w1, p1)` ranks strictly before `(w2, p2)`: heavier first,
/// then the lexicographically smaller endpoint pair.
#[inline]
fn ranks_before(w1: f64, p1: (usize, usize), w2: f64, p2: (usize, usize)) -> bool {
    w1 > w2 || (w1 == w2 && p1 < p2)
}

/// Maximum-weight spanning tree under `|weights|`, by dense Prim in O(n^2).
///
/// Ties are broken toward the smaller `(min, max)` endpoint pair, which makes
/// the edge order strict and the resulting tree unique. Edges are returned
/// sorted.
pub fn max_spanning_tree(weights: &CorrelationMatrix) -> Result<TreeTopology> {
    let n = weights.n();
    if n == 0 {
        return Err(Error::InvalidParameter("spanning tree needs n >= 1".into()));
    }
    let mut in_tree = vec![false; n];
    // Best connection of each outside vertex: (weight, attachment vertex).
    let mut best_w = vec![f64::NEG_INFINITY; n];
    let mut best_to = vec![usize::MAX; n];
    let key = |u: usize, v: usize| (u.min(v), u.max(v));

    in_tree[0] = true;
    for v in 1..n {
        best_w[v] = weights.get(0, v).abs();
        best_to[v] = 0;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut pick = usize::MAX;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if pick == usize::MAX
                || ranks_before(best_w[v], key(v, best_to[v]), best_w[pick], key(pick, best_to[pick]))
            {
                pick = v;
            }
        }
        in_tree[pick] = true;
        edges.push(key(pick, best_to[pick]));
        let row = weights.row(pick);
        for v in 0..n {
            if !in_tree[v] {
                let w = row[v].abs();
                if ranks_before(w, key(v, pick), best_w[v], key(v, best_to[v])) {
                    best_w[v] = w;
                    best_to[v] = pick;
                }
            }
        }
    }
    edges.sort_unstable();
    TreeTopology::new(n, edges)
}

/// Blocks left after deleting the weak edges from a Chow-Liu tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexPartition {
    /// Disjoint sorted blocks, ordered by their smallest vertex.
    pub blocks: Vec<Vec<usize>>,
    /// Weak edges `(u, v, mu_tilde_uv)` joining the blocks.
    pub weak_edges: Vec<(usize, usize, f64)>,
}

impl VertexPartition {
    /// `block_of[v]` is the index of the block containing `v`.
    pub fn block_index(&self, n: usize) -> Vec<usize> {
        let mut idx = vec![usize::MAX; n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &v in block {
                idx[v] = b;
            }
        }
        idx
    }
}

pub fn weak_edge_partition(tcl: &TreeTopology, mu_tilde: &CorrelationMatrix) -> Result<VertexPartition> {
    let n = tcl.n();
    if mu_tilde.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mu_tilde.n() });
    }
    let mut dsu = DisjointSet::new(n);
    let mut weak_edges = Vec::new();
    for &(u, v) in tcl.edges() {
        let m = mu_tilde.get(u, v);
        if m <= WEAK_EDGE_THRESHOLD {
            weak_edges.push((u, v, m));
        } else {
            dsu.union(u, v);
        }
    }
    let mut block_of_root = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let r = dsu.find(v);
        if block_of_root[r] == usize::MAX {
            block_of_root[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[block_of_root[r]].push(v);
    }
    Ok(VertexPartition { blocks, weak_edges })
}

/// Chow-Liu model: the maximum spanning tree with `theta_e = mu_e` on its edges.
pub fn chow_liu_model(mu: &CorrelationMatrix) -> Result<TreeIsingModel> {
    let tree = max_spanning_tree(mu)?;
    let theta = tree.edges().iter().map(|&(u, v)| mu.get(u, v)).collect();
    TreeIsingModel::new(tree, theta)
}

/// Learns a ferromagnetic tree model by solving each strongly connected block
/// with `subsolver` and joining blocks through the weak edges with
/// `theta_e = mu_tilde_e`.
pub fn learn_ferro_model<F>(mu_tilde: &CorrelationMatrix, eps: f64, subsolver: F) -> Result<TreeIsingModel>
where
    F: Fn(&CorrelationMatrix, f64) -> Result<TreeIsingModel>,
{
    Ok(learn_ferro_model_with_partition(mu_tilde, eps, subsolver)?.0)
}

/// Same as [`learn_ferro_model`], also returning the block partition.
pub fn learn_ferro_model_with_partition<F>(
    mu_tilde: &CorrelationMatrix,
    eps: f64,
    subsolver: F,
) -> Result<(TreeIsingModel, VertexPartition)>
where
    F: Fn(&CorrelationMatrix, f64) -> Result<TreeIsingModel>,
{
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
    }
    let n = mu_tilde.n();
    for u in 0..n {
        for v in u + 1..n {
            let x = mu_tilde.get(u, v);
            if x < 0.0 {
                return Err(Error::NegativeCorrelation { u, v, value: x });
            }
        }
    }
    let tcl = max_spanning_tree(mu_tilde)?;
    let partition = weak_edge_partition(&tcl, mu_tilde)?;

    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1));
    for block in &partition.blocks {
        if block.len() < 2 {
            continue;
        }
        // A single block spanning every vertex needs no copy.
        let sub = if block.len() == n {
            subsolver(mu_tilde, eps)?
        } else {
            subsolver(&mu_tilde.submatrix(block), eps)?
        };
        if sub.n() != block.len() {
            return Err(Error::DimensionMismatch { expected: block.len(), got: sub.n() });
        }
        edges.extend(sub.weighted_edges().map(|(a, b, t)| (block[a], block[b], t)));
    }
    edges.extend(partition.weak_edges.iter().copied());
    let model = TreeIsingModel::from_edges(n, &edges)?;
    Ok((model, partition))
}
