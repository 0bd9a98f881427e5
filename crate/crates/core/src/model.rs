//! Tree-structured Ising models without external field.
//!
//! Models are parameterized by edge correlations `theta_e = E[X_u X_v]` rather
//! than couplings; the coupling is `atanh(theta_e)`. Under this
//! parameterization every pairwise correlation is the product of the edge
//! correlations along the connecting tree path, which is what most of the
//! crate relies on.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{for_each_upper_pair, mirror_upper, DisjointSet};

/// Largest vertex count (or subset size) handled by exhaustive enumeration.
pub const MAX_EXACT_N: usize = 15;

const SYMMETRY_TOL: f64 = 1e-9;

/// Undirected spanning tree on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TreeTopology {
    /// Builds a tree, normalizing every edge to `(min, max)`. Edge order is kept.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree("a tree needs at least one vertex".into()));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "expected {} edges for {} vertices, got {}",
                n - 1,
                n,
                edges.len()
            )));
        }
        let mut dsu = DisjointSet::new(n);
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidTree(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidTree(format!("self-loop at vertex {u}")));
            }
            if !dsu.union(u, v) {
                return Err(Error::InvalidTree(format!(
                    "edge ({u}, {v}) closes a cycle or duplicates an edge"
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        Ok(Self { n, edges: normalized })
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|v| (v - 1, v)).collect()).expect("path is a tree")
    }

    pub fn star(n: usize, center: usize) -> Self {
        Self::new(n, (0..n).filter(|&v| v != center).map(|v| (center, v)).collect())
            .expect("star is a tree")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Adjacency lists of `(neighbor, edge index)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        adj
    }

    /// Edges as a sorted set of `(min, max)` pairs, for comparing topologies.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    pub fn same_edges(&self, other: &TreeTopology) -> bool {
        self.n == other.n && self.edge_set() == other.edge_set()
    }

    /// Edge indices on the path from `u` to `v`.
    pub fn path_edges(&self, u: usize, v: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let (parent, _) = bfs_parents(&adj, u);
        let mut out = Vec::new();
        let mut x = v;
        while x != u {
            let (p, e) = parent[x].expect("tree is connected");
            out.push(e);
            x = p;
        }
        out.reverse();
        out
    }

    /// Edge index connecting `u` and `v`, if they are adjacent.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.iter().position(|&e| e == key)
    }
}

/// BFS from `root`: `parent[v] = Some((parent vertex, edge index))`, plus visit order.
pub(crate) fn bfs_parents(
    adj: &[Vec<(usize, usize)>],
    root: usize,
) -> (Vec<Option<(usize, usize)>>, Vec<usize>) {
    let n = adj.len();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &(y, e) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some((x, e));
                queue.push_back(y);
            }
        }
    }
    (parent, order)
}

/// Tree Ising model with per-edge correlations in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeIsingModel {
    topology: TreeTopology,
    theta: Vec<f64>,
}

impl TreeIsingModel {
    pub fn new(topology: TreeTopology, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != topology.edges().len() {
            return Err(Error::DimensionMismatch {
                expected: topology.edges().len(),
                got: theta.len(),
            });
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite() || t.abs() > 1.0) {
            return Err(Error::InvalidParameter(format!("edge correlation {t} outside [-1, 1]")));
        }
        Ok(Self { topology, theta })
    }

    /// Builds a model from `(u, v, theta)` triples.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let topology = TreeTopology::new(n, edges.iter().map(|&(u, v, _)| (u, v)).collect())?;
        Self::new(topology, edges.iter().map(|e| e.2).collect())
    }

    /// All-independent model on a path.
    pub fn independent(n: usize) -> Self {
        let topology = TreeTopology::path(n);
        let theta = vec![0.0; n.saturating_sub(1)];
        Self { topology, theta }
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Iterator over `(u, v, theta)`.
    pub fn weighted_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.topology.edges().iter().zip(&self.theta).map(|(&(u, v), &t)| (u, v, t))
    }

    /// Coupling `J_e = atanh(theta_e)`; infinite for `|theta_e| = 1`.
    pub fn coupling(&self, edge: usize) -> f64 {
        self.theta[edge].atanh()
    }

    /// Exact pairwise correlations: products of `theta` along tree paths.
    pub fn pairwise_correlations(&self) -> CorrelationMatrix {
        let n = self.n();
        let adj = self.topology.adjacency();
        let mut data = vec![0.0; n * n];
        let mut stack = Vec::with_capacity(n);
        let mut visited = vec![usize::MAX; n];
        for root in 0..n {
            let row = &mut data[root * n..(root + 1) * n];
            row[root] = 1.0;
            visited[root] = root;
            stack.push(root);
            while let Some(x) = stack.pop() {
                for &(y, e) in &adj[x] {
                    if visited[y] != root {
                        visited[y] = root;
                        row[y] = row[x] * self.theta[e];
                        stack.push(y);
                    }
                }
            }
        }
        CorrelationMatrix { n, data }
    }

    /// Sign of the product of `theta` along the `u`-`v` path (0 if any factor is 0).
    pub fn sign_of_path_product(&self, u: usize, v: usize) -> i8 {
        let mut sign = 1i8;
        for e in self.topology.path_edges(u, v) {
            let t = self.theta[e];
            if t == 0.0 {
                return 0;
            }
            if t < 0.0 {
                sign = -sign;
            }
        }
        sign
    }

    /// Joint law of the variables in `subset`, by leaf elimination on the tree.
    pub fn marginal_joint(&self, subset: &[usize]) -> Result<JointTable> {
        marginal_joint(self, subset)
    }

    /// Draws `m` i.i.d. samples: uniform root, and each child copies its parent
    /// with probability `(1 + theta_e) / 2`.
    pub fn sample(&self, m: usize, seed: u64) -> Result<SampleMatrix> {
        if m == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        let n = self.n();
        let adj = self.topology.adjacency();
        let (parent, order) = bfs_parents(&adj, 0);
        // Flip probability (1 - theta)/2 as a 32-bit threshold: the edge flips
        // when a uniform u32 falls below it, or always when theta = -1.
        let steps: Vec<(usize, usize, u64)> = order[1..]
            .iter()
            .map(|&v| {
                let (p, e) = parent[v].expect("non-root has a parent");
                let flip = 0.5 * (1.0 - self.theta[e]);
                (v, p, (flip * 2f64.powi(32)).round() as u64)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0i8; m * n];
        let mut draws = vec![0u32; n];
        for row in values.chunks_exact_mut(n) {
            rng.fill(&mut draws[..]);
            row[order[0]] = if draws[0] & 1 == 0 { 1 } else { -1 };
            for (&(v, p, threshold), &draw) in steps.iter().zip(&draws[1..]) {
                // Branch-free on purpose: the comparison is a coin flip.
                let flip = i8::from(u64::from(draw) < threshold);
                row[v] = row[p] * (1 - 2 * flip);
            }
        }
        Ok(SampleMatrix { m, n, values })
    }
}

/// Dense symmetric matrix of pairwise correlations (true, estimated, or learned).
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CorrelationMatrix {
    /// Validates symmetry (up to 1e-9) and range, then symmetrizes and sets
    /// the diagonal to 1. Entries within 1e-9 outside `[-1, 1]` are clamped.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        let mut out = Self { n, data };
        let mut bad = None;
        for_each_upper_pair(n, |u, v| {
            if bad.is_some() {
                return;
            }
            let (a, b) = (out.data[u * n + v], out.data[v * n + u]);
            let m = 0.5 * (a + b);
            if !a.is_finite() || !b.is_finite() {
                bad = Some(format!("non-finite correlation at ({u}, {v})"));
            } else if (a - b).abs() > SYMMETRY_TOL {
                bad = Some(format!("correlation matrix not symmetric at ({u}, {v}): {a} vs {b}"));
            } else if m.abs() > 1.0 + SYMMETRY_TOL {
                bad = Some(format!("correlation {m} at ({u}, {v}) outside [-1, 1]"));
            } else {
                out.set(u, v, m.clamp(-1.0, 1.0));
            }
        });
        if let Some(msg) = bad {
            return Err(Error::InvalidParameter(msg));
        }
        for u in 0..n {
            out.data[u * n + u] = 1.0;
        }
        Ok(out)
    }

    /// Builds a matrix from `f(u, v)` evaluated on `u < v`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for u in 0..n {
            data[u * n + u] = 1.0;
            for v in u + 1..n {
                let x = f(u, v);
                if !x.is_finite() || x.abs() > 1.0 + SYMMETRY_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "correlation {x} at ({u}, {v}) outside [-1, 1]"
                    )));
                }
                data[u * n + v] = x.clamp(-1.0, 1.0);
            }
        }
        mirror_upper(n, &mut data);
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for u in 0..n {
            data[u * n + u] = 1.0;
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    #[inline]
    fn set(&mut self, u: usize, v: usize, x: f64) {
        self.data[u * self.n + v] = x;
        self.data[v * self.n + u] = x;
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entrywise absolute value.
    pub fn abs(&self) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x.abs()).collect() }
    }

    /// Principal submatrix on `vertices`, re-indexed in the given order.
    pub fn submatrix(&self, vertices: &[usize]) -> Self {
        let k = vertices.len();
        let mut data = Vec::with_capacity(k * k);
        for &u in vertices {
            let row = self.row(u);
            data.extend(vertices.iter().map(|&v| row[v]));
        }
        Self { n: k, data }
    }

    /// Largest off-diagonal `|self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.max_abs_diff_with_pair(other)?.0)
    }

    /// Largest off-diagonal `|self - other|` and the first pair attaining it.
    pub fn max_abs_diff_with_pair(&self, other: &Self) -> Result<(f64, Option<(usize, usize)>)> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut best = (0.0, None);
        for u in 0..self.n {
            for v in u + 1..self.n {
                let d = (self.get(u, v) - other.get(u, v)).abs();
                if d > best.0 || best.1.is_none() {
                    best = (d, Some((u, v)));
                }
            }
        }
        Ok(best)
    }
}

/// Local TV of order 2 between models with unbiased marginals, computed from
/// their correlation matrices: half the largest off-diagonal difference.
pub fn loctv2(p: &CorrelationMatrix, q: &CorrelationMatrix) -> Result<f64> {
    Ok(0.5 * p.max_abs_diff(q)?)
}

/// Joint probability table over `{-1,+1}^k` for an ordered variable list.
///
/// Index bit `k-1-i` is set when variable `i` takes the value `-1`, so for
/// two variables the order is `(++, +-, -+, --)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    pub vars: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointTable {
    pub fn index_of(assignment: &[i8]) -> usize {
        assignment.iter().fold(0, |acc, &x| (acc << 1) | usize::from(x < 0))
    }

    pub fn prob(&self, assignment: &[i8]) -> f64 {
        self.probs[Self::index_of(assignment)]
    }

    /// Total variation distance to another table over the same variables.
    pub fn tv(&self, other: &JointTable) -> f64 {
        0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// Marginalizes onto `keep` (positions into `vars`, in the output order).
    pub fn marginalize(&self, keep: &[usize]) -> JointTable {
        let k = self.vars.len();
        let mut probs = vec![0.0; 1 << keep.len()];
        for (idx, &p) in self.probs.iter().enumerate() {
            let out = keep.iter().fold(0, |acc, &pos| (acc << 1) | ((idx >> (k - 1 - pos)) & 1));
            probs[out] += p;
        }
        JointTable { vars: keep.iter().map(|&p| self.vars[p]).collect(), probs }
    }
}

fn marginal_joint(model: &TreeIsingModel, subset: &[usize]) -> Result<JointTable> {
    let k = subset.len();
    let n = model.n();
    if k > MAX_EXACT_N {
        return Err(Error::TooLarge { what: "marginal subset", n: k, max: MAX_EXACT_N });
    }
    if k == 0 {
        return Ok(JointTable { vars: Vec::new(), probs: vec![1.0] });
    }
    let mut position = vec![usize::MAX; n];
    for (i, &v) in subset.iter().enumerate() {
        if v >= n {
            return Err(Error::InvalidParameter(format!("vertex {v} out of range")));
        }
        if position[v] != usize::MAX {
            return Err(Error::InvalidParameter(format!("vertex {v} repeated in subset")));
        }
        position[v] = i;
    }
    let bit = |v: usize| 1u32 << (k - 1 - position[v]);

    let adj = model.topology.adjacency();
    let (parent, order) = bfs_parents(&adj, subset[0]);
    // Only vertices whose subtree meets the subset matter; the rest sum to one.
    let mut hits = vec![0usize; n];
    for &v in order.iter().rev() {
        if position[v] != usize::MAX {
            hits[v] += 1;
        }
        if let Some((p, _)) = parent[v] {
            hits[p] += hits[v];
        }
    }

    // messages[v][s]: law of subset variables below v given x_v, keyed by mask.
    // s = 0 is x_v = +1, s = 1 is x_v = -1.
    type Message = [BTreeMap<u32, f64>; 2];
    let mut messages: Vec<Option<Message>> = vec![None; n];
    for &v in order.iter().rev() {
        if hits[v] == 0 {
            continue;
        }
        let mut msg: Message = Default::default();
        for s in 0..2 {
            let mask = if position[v] != usize::MAX && s == 1 { bit(v) } else { 0 };
            msg[s].insert(mask, 1.0);
        }
        for &(c, e) in &adj[v] {
            if parent[c].map(|(p, _)| p) != Some(v) || hits[c] == 0 {
                continue;
            }
            let child = messages[c].take().expect("children processed first");
            let theta = model.theta[e];
            for s in 0..2 {
                // Law of the child's subset variables given x_v = s.
                let mut from_child: BTreeMap<u32, f64> = BTreeMap::new();
                for (t, table) in child.iter().enumerate() {
                    let same = if s == t { 1.0 } else { -1.0 };
                    let w = 0.5 * (1.0 + theta * same);
                    for (&mask, &p) in table {
                        *from_child.entry(mask).or_insert(0.0) += w * p;
                    }
                }
                let mut combined = BTreeMap::new();
                for (&a, &pa) in &msg[s] {
                    for (&b, &pb) in &from_child {
                        *combined.entry(a | b).or_insert(0.0) += pa * pb;
                    }
                }
                msg[s] = combined;
            }
        }
        messages[v] = Some(msg);
    }

    let root = messages[subset[0]].take().expect("root message");
    let mut probs = vec![0.0; 1 << k];
    for table in &root {
        for (&mask, &p) in table {
            probs[mask as usize] += 0.5 * p;
        }
    }
    Ok(JointTable { vars: subset.to_vec(), probs })
}

/// Exact local TV of order `k`: the largest TV between size-`k` marginals.
pub fn loctv_k_exact(p: &TreeIsingModel, q: &TreeIsingModel, k: usize) -> Result<f64> {
    let n = p.n();
    if q.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.n() });
    }
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge { what: "exact local TV", n, max: MAX_EXACT_N });
    }
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("order k = {k} must satisfy 2 <= k <= n = {n}")));
    }
    let mut best: f64 = 0.0;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let tv = p.marginal_joint(&subset)?.tv(&q.marginal_joint(&subset)?);
        best = best.max(tv);
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    Ok(best)
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
pub(crate) fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `m x n` matrix of +-1 observations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMatrix {
    m: usize,
    n: usize,
    values: Vec<i8>,
}

impl SampleMatrix {
    pub fn new(m: usize, n: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != m * n {
            return Err(Error::DimensionMismatch { expected: m * n, got: values.len() });
        }
        if let Some(x) = values.iter().find(|&&x| x != 1 && x != -1) {
            return Err(Error::InvalidParameter(format!("sample entry {x} is not +-1")));
        }
        Ok(Self { m, n, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.values.chunks_exact(self.n.max(1)).take(self.m)
    }

    /// Empirical second moments `(1/m) sum_i x_iu x_iv`, unit diagonal.
    ///
    /// Columns are packed into bit words (bit set for `-1`), so each pair
    /// costs `m / 64` XOR and popcount operations.
    pub fn empirical_correlations(&self) -> Result<CorrelationMatrix> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        let (m, n) = (self.m, self.n);
        let words = m.div_ceil(64);
        let mut packed = vec![0u64; n * words];
        for (i, row) in self.rows().enumerate() {
            let (w, bit) = (i / 64, i % 64);
            for (v, &x) in row.iter().enumerate() {
                packed[v * words + w] |= u64::from(x < 0) << bit;
            }
        }
        let col = |v: usize| &packed[v * words..(v + 1) * words];
        CorrelationMatrix::from_fn(n, |u, v| {
            let disagree: u64 = col(u).iter().zip(col(v)).map(|(a, b)| u64::from((a ^ b).count_ones())).sum();
            (m as f64 - 2.0 * disagree as f64) / m as f64
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    RandomSign,
    TowardZero,
    AwayFromZero,
}

/// Moves every off-diagonal entry by exactly `eps` and clamps to `[-1, 1]`.
///
/// `TowardZero` and `AwayFromZero` treat a zero entry as positive.
pub fn perturb(
    mu: &CorrelationMatrix,
    eps: f64,
    seed: u64,
    mode: PerturbMode,
) -> Result<CorrelationMatrix> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CorrelationMatrix::from_fn(mu.n(), |u, v| {
        let x = mu.get(u, v);
        let outward = if x < 0.0 { -1.0 } else { 1.0 };
        let dir = match mode {
            PerturbMode::RandomSign => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            PerturbMode::TowardZero => -outward,
            PerturbMode::AwayFromZero => outward,
        };
        (x + dir * eps).clamp(-1.0, 1.0)
    })
}
