//! Slow, direct reference implementations for cross-checking the fast paths
//! on small instances.

use crate::error::{Error, Result};
use crate::metric::DistanceEstimate;
use crate::model::{CorrelationMatrix, JointTable, TreeIsingModel, MAX_EXACT_N};

/// Largest input accepted by the cubic closures.
pub const MAX_CLOSURE_N: usize = 64;

/// Full joint law from the unnormalized weights `exp(sum_e atanh(theta_e) x_u x_v)`.
///
/// Edges with `|theta_e| = 1` are hard constraints (`x_u x_v = sign(theta_e)`).
/// Assignments use the [`JointTable`] bit order over vertices `0..n`.
pub fn brute_force_joint(model: &TreeIsingModel) -> Result<JointTable> {
    let n = model.n();
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge { what: "brute-force joint", n, max: MAX_EXACT_N });
    }
    let edges: Vec<(usize, usize, f64)> = model.weighted_edges().collect();
    let spin = |state: usize, v: usize| if (state >> (n - 1 - v)) & 1 == 1 { -1.0 } else { 1.0 };
    let mut logw = vec![0.0; 1 << n];
    for (state, lw) in logw.iter_mut().enumerate() {
        for &(u, v, t) in &edges {
            let s = spin(state, u) * spin(state, v);
            if t.abs() == 1.0 {
                if s != t {
                    *lw = f64::NEG_INFINITY;
                }
            } else {
                *lw += t.atanh() * s;
            }
        }
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logw.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(JointTable { vars: (0..n).collect(), probs: weights.iter().map(|w| w / z).collect() })
}

/// Correlation matrix `E[X_u X_v]` of a full joint table over `0..n`.
pub fn joint_moments(table: &JointTable) -> CorrelationMatrix {
    let n = table.vars.len();
    let mut data = vec![0.0; n * n];
    for (state, &p) in table.probs.iter().enumerate() {
        for u in 0..n {
            let xu = if (state >> (n - 1 - u)) & 1 == 1 { -1.0 } else { 1.0 };
            for v in u + 1..n {
                let xv = if (state >> (n - 1 - v)) & 1 == 1 { -1.0 } else { 1.0 };
                data[u * n + v] += p * xu * xv;
            }
        }
    }
    for u in 0..n {
        data[u * n + u] = 1.0;
        for v in u + 1..n {
            data[v * n + u] = data[u * n + v];
        }
    }
    CorrelationMatrix::new(n, data).expect("moments of a distribution are valid correlations")
}

/// Minimax path metric `e(u,v) = min over paths of the largest step`, by a
/// Floyd-Warshall style closure.
pub fn minimax_path_closure(a: &DistanceEstimate) -> Result<DistanceEstimate> {
    let n = a.n();
    if n > MAX_CLOSURE_N {
        return Err(Error::TooLarge { what: "minimax closure", n, max: MAX_CLOSURE_N });
    }
    let mut e = a.as_slice().to_vec();
    for k in 0..n {
        for i in 0..n {
            let ik = e[i * n + k];
            for j in 0..n {
                let via = ik.max(e[k * n + j]);
                if via < e[i * n + j] {
                    e[i * n + j] = via;
                }
            }
        }
    }
    DistanceEstimate::new(n, e)
}

/// All-pairs shortest paths by Floyd-Warshall.
pub fn all_pairs_shortest_paths(d: &DistanceEstimate) -> Result<DistanceEstimate> {
    let n = d.n();
    if n > MAX_CLOSURE_N {
        return Err(Error::TooLarge { what: "Floyd-Warshall", n, max: MAX_CLOSURE_N });
    }
    let mut e = d.as_slice().to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = e[i * n + k] + e[k * n + j];
                if via < e[i * n + j] {
                    e[i * n + j] = via;
                }
            }
        }
    }
    // Summation order can break exact symmetry; keep the upper triangle.
    for i in 0..n {
        for j in i + 1..n {
            e[j * n + i] = e[i * n + j];
        }
    }
    DistanceEstimate::new(n, e)
}

/// Pairwise local TV together with the first pair attaining it.
pub fn exhaustive_loctv2_certificate(
    p: &CorrelationMatrix,
    q: &CorrelationMatrix,
) -> Result<(f64, Option<(usize, usize)>)> {
    let (diff, pair) = p.max_abs_diff_with_pair(q)?;
    Ok((0.5 * diff, pair))
}
