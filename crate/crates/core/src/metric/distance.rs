use crate::error::{Error, Result};
use crate::model::CorrelationMatrix;
use crate::util::{for_each_upper_pair, mirror_upper};

/// Symmetric nonnegative dissimilarity matrix with zero diagonal; `+inf` is
/// allowed off the diagonal and means "no usable estimate".
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceEstimate {
    n: usize,
    data: Vec<f64>,
}

impl DistanceEstimate {
    /// Checks symmetry (exact), nonnegativity and absence of NaN; the diagonal
    /// is overwritten with 0.
    pub fn new(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        let mut bad = None;
        for_each_upper_pair(n, |u, v| {
            let (a, b) = (data[u * n + v], data[v * n + u]);
            if bad.is_none() && (a.is_nan() || b.is_nan() || a < 0.0 || b < 0.0 || a != b) {
                bad = Some((u, v, a, b));
            }
        });
        if let Some((u, v, a, b)) = bad {
            return Err(if a == b {
                Error::InvalidParameter(format!("distance at ({u}, {v}) must be nonnegative, got {a}"))
            } else {
                Error::InvalidParameter(format!("distance matrix not symmetric at ({u}, {v}): {a} vs {b}"))
            });
        }
        for u in 0..n {
            data[u * n + u] = 0.0;
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from `f(u, v)` evaluated on `u < v`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let x = f(u, v);
                if x.is_nan() || x < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "distance at ({u}, {v}) must be nonnegative, got {x}"
                    )));
                }
                data[u * n + v] = x;
            }
        }
        mirror_upper(n, &mut data);
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Ultrametric inequality `d(u,v) <= max(d(u,w), d(w,v))` up to `tol`.
    pub fn is_ultrametric(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|u| {
            (0..n).all(|v| (0..n).all(|w| self.get(u, v) <= self.get(u, w).max(self.get(w, v)) + tol))
        })
    }
}

/// Evolutionary distance estimate `-log(max(0, mu - eps))`, infinite when
/// `mu <= eps`.
pub fn evolutionary_estimate(mu_tilde: &CorrelationMatrix, eps: f64) -> Result<DistanceEstimate> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
    }
    DistanceEstimate::from_fn(mu_tilde.n(), |u, v| {
        let x = mu_tilde.get(u, v) - eps;
        if x > 0.0 {
            // Entries above 1 cannot occur, but -ln(1) = -0.0 must not leak out.
            (-x.ln()).max(0.0)
        } else {
            f64::INFINITY
        }
    })
}

/// Single-source shortest paths on the complete graph weighted by `d`,
/// by dense Dijkstra in O(n^2). Unreachable vertices get `+inf`.
pub fn shortest_paths_from_root(d: &DistanceEstimate, rho: usize) -> Vec<f64> {
    let n = d.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    if rho >= n {
        return dist;
    }
    dist[rho] = 0.0;
    for _ in 0..n {
        let mut x = usize::MAX;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && (x == usize::MAX || dist[v] < dist[x]) {
                x = v;
            }
        }
        if x == usize::MAX {
            break;
        }
        done[x] = true;
        let row = d.row(x);
        for v in 0..n {
            if !done[v] {
                let cand = dist[x] + row[v];
                if cand < dist[v] {
                    dist[v] = cand;
                }
            }
        }
    }
    dist
}
