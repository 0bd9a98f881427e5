//! Small shared helpers.

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Visits every pair `u < v` in square tiles, so that touching both
/// `(u, v)` and `(v, u)` of a row-major matrix stays cache friendly.
pub fn for_each_upper_pair(n: usize, mut f: impl FnMut(usize, usize)) {
    const TILE: usize = 64;
    for bu in (0..n).step_by(TILE) {
        for bv in (bu..n).step_by(TILE) {
            for u in bu..(bu + TILE).min(n) {
                for v in bv.max(u + 1)..(bv + TILE).min(n) {
                    f(u, v);
                }
            }
        }
    }
}

/// Copies the strict upper triangle of a row-major `n x n` matrix onto the
/// lower triangle.
pub fn mirror_upper(n: usize, data: &mut [f64]) {
    for_each_upper_pair(n, |u, v| data[v * n + u] = data[u * n + v]);
}
