use super::distance::{shortest_paths_from_root, DistanceEstimate};
use super::steiner::{desteinerize, ultra_minus_centroid, CentroidMetric, SteinerTree, WeightedTree};
use super::ultrametric::{subdominant_ultrametric, Dendrogram};
use crate::error::{Error, Result};

/// Additive slack coefficient on `a(u, v)` that the error analysis assumes.
pub const DEFAULT_SLACK_COEFF: f64 = 44.0;

/// Pairs with a preliminary distance at or beyond this many multiples of `L`
/// are treated as uninformative.
pub const FAR_MULTIPLE: f64 = 3.0;

/// Everything computed by [`additive_metric_reconstruction`].
#[derive(Clone, Debug)]
pub struct AmrOutput {
    pub steiner: SteinerTree,
    pub dendrogram: Dendrogram,
    pub centroid: CentroidMetric,
    /// Shortest-path distances from the root through `d_pre`.
    pub root_distances: Vec<f64>,
    pub diagnostics: AmrDiagnostics,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AmrDiagnostics {
    /// `L >= 100 eps`, the regime in which the error bounds are proven.
    pub hypotheses_hold: bool,
    /// Every root pair has `e(rho, u) = 2 D_max` (within 1e-9).
    pub root_row_ok: bool,
    /// Negative leaf lengths set to zero while realizing `e - c`.
    pub leaf_clamps: usize,
}

fn check_params(l: f64, eps: f64) -> Result<()> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidParameter(format!("L must be positive and finite, got {l}")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative and finite, got {eps}")));
    }
    Ok(())
}

/// Reconstructs an additive metric (a tree with Steiner vertices) from noisy
/// distances, using the default slack `44 eps`.
pub fn additive_metric_reconstruction(d_pre: &DistanceEstimate, l: f64, eps: f64) -> Result<AmrOutput> {
    additive_metric_reconstruction_with_slack(d_pre, l, eps, DEFAULT_SLACK_COEFF)
}

/// Root 0, Dijkstra distances, Farris-style capped transform
/// `a(u,v) = min(2 D_max, d_pre(u,v) + ell_u + ell_v + slack_coeff * eps)` on
/// pairs closer than `3L` (otherwise `2 D_max`), subdominant ultrametric `e`,
/// and finally `e - c` as a Steiner tree.
pub fn additive_metric_reconstruction_with_slack(
    d_pre: &DistanceEstimate,
    l: f64,
    eps: f64,
    slack_coeff: f64,
) -> Result<AmrOutput> {
    check_params(l, eps)?;
    if !(slack_coeff >= 0.0) {
        return Err(Error::InvalidParameter(format!("slack coefficient must be nonnegative, got {slack_coeff}")));
    }
    let n = d_pre.n();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one vertex".into()));
    }
    let rho = 0;
    let root_distances = shortest_paths_from_root(d_pre, rho);
    let centroid = CentroidMetric::from_root_distances(&root_distances, rho)?;
    let cap = 2.0 * centroid.d_max;
    let slack = slack_coeff * eps;
    let far = FAR_MULTIPLE * l;

    let a = DistanceEstimate::from_fn(n, |u, v| {
        let x = d_pre.get(u, v);
        if u == rho || v == rho || x >= far {
            cap
        } else {
            cap.min(x + centroid.c(u, v) + slack)
        }
    })?;
    let dendrogram = subdominant_ultrametric(&a)?;
    let root_row_ok = (0..n).filter(|&u| u != rho).all(|u| (dendrogram.e(rho, u) - cap).abs() <= 1e-9);
    let realized = ultra_minus_centroid(&dendrogram, &centroid, rho)?;
    let diagnostics = AmrDiagnostics {
        hypotheses_hold: eps > 0.0 && l >= 100.0 * eps,
        root_row_ok,
        leaf_clamps: realized.leaf_clamps,
    };
    if realized.leaf_clamps > 0 {
        log::debug!("additive reconstruction clamped {} leaf edges", realized.leaf_clamps);
    }
    Ok(AmrOutput { steiner: realized.tree, dendrogram, centroid, root_distances, diagnostics })
}

/// Full reconstruction output, keeping the intermediate Steiner tree.
#[derive(Clone, Debug)]
pub struct TmrOutput {
    pub tree: WeightedTree,
    pub amr: AmrOutput,
    /// Steiner radius after pruning, which bounds the desteinerization error.
    pub c_radius: f64,
}

/// Tree metric on the observed vertices only: additive reconstruction
/// followed by Steiner-vertex removal.
pub fn tree_metric_reconstruction(d_pre: &DistanceEstimate, l: f64, eps: f64) -> Result<WeightedTree> {
    Ok(tree_metric_reconstruction_detailed(d_pre, l, eps, DEFAULT_SLACK_COEFF)?.tree)
}

pub fn tree_metric_reconstruction_detailed(
    d_pre: &DistanceEstimate,
    l: f64,
    eps: f64,
    slack_coeff: f64,
) -> Result<TmrOutput> {
    let amr = additive_metric_reconstruction_with_slack(d_pre, l, eps, slack_coeff)?;
    let d = desteinerize(&amr.steiner)?;
    Ok(TmrOutput { tree: d.tree, amr, c_radius: d.c_radius })
}
