//! Chow-Liu++: block decomposition, tree metric reconstruction inside each
//! block, and sign recovery for non-ferromagnetic inputs.

use serde::{Deserialize, Serialize};

use crate::chow_liu::learn_ferro_model;
use crate::error::{Error, Result};
use crate::metric::{evolutionary_estimate, tree_metric_reconstruction_detailed, DistanceEstimate};
use crate::model::{loctv2, CorrelationMatrix, SampleMatrix, TreeIsingModel};
use crate::util::DisjointSet;

/// Correlations inside a block are assumed to be at least `1/20`, so the
/// relevant evolutionary distances live on the scale `L = ln 20`.
pub fn lower_bounded_scale() -> f64 {
    20f64.ln()
}

/// Inputs with `eps` at or above this value are outside the regime the error
/// guarantee is stated for; they are accepted with a warning.
pub const GUARANTEE_EPS_LIMIT: f64 = 1e-5;

/// Tuning of the reconstruction noise level inside each block.
///
/// The reconstruction runs with noise level `eps_scale * eps` and pads the
/// near-pair dissimilarities by `slack_coeff` times that level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub eps_scale: f64,
    pub slack_coeff: f64,
}

impl LearnerConfig {
    /// The worst-case constants from the error analysis. With them the slack
    /// dominates every distance unless `eps` is astronomically small, so each
    /// block collapses to a star; kept for comparison only.
    pub const WORST_CASE: LearnerConfig = LearnerConfig { eps_scale: 200_000.0, slack_coeff: 44.0 };
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self { eps_scale: 1.0, slack_coeff: 0.0 }
    }
}

/// Learns a tree model whose true edge correlations are bounded away from 0
/// (at least 1/20) from ferromagnetic estimates.
pub fn learn_lwr_bdd_model(mu_tilde: &CorrelationMatrix, eps: f64) -> Result<TreeIsingModel> {
    learn_lwr_bdd_model_with(mu_tilde, eps, &LearnerConfig::default())
}

pub fn learn_lwr_bdd_model_with(
    mu_tilde: &CorrelationMatrix,
    eps: f64,
    cfg: &LearnerConfig,
) -> Result<TreeIsingModel> {
    let n = mu_tilde.n();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one vertex".into()));
    }
    let d_pre = evolutionary_estimate(mu_tilde, eps)?;
    let components = finite_components(&d_pre);
    if components.len() == 1 {
        return reconstruct_connected(&d_pre, eps, cfg);
    }
    // Vertices with no finite path to the root cannot be placed by the
    // reconstruction; each such component is solved on its own and hung off
    // vertex 0 through an independent (theta = 0) edge.
    log::debug!("evolutionary distances split into {} components", components.len());
    let mut edges = Vec::with_capacity(n - 1);
    for comp in &components {
        if comp.len() > 1 {
            let sub = reconstruct_connected(&submatrix(&d_pre, comp), eps, cfg)?;
            edges.extend(sub.weighted_edges().map(|(a, b, t)| (comp[a], comp[b], t)));
        }
        if comp[0] != 0 {
            edges.push((0, comp[0], 0.0));
        }
    }
    TreeIsingModel::from_edges(n, &edges)
}

fn reconstruct_connected(d_pre: &DistanceEstimate, eps: f64, cfg: &LearnerConfig) -> Result<TreeIsingModel> {
    let out = tree_metric_reconstruction_detailed(d_pre, lower_bounded_scale(), cfg.eps_scale * eps, cfg.slack_coeff)?;
    let theta = out.tree.lengths.iter().map(|&d| (-d).exp().clamp(0.0, 1.0)).collect();
    TreeIsingModel::new(out.tree.topology, theta)
}

/// Connected components of the finite-entry graph, each sorted, ordered by
/// smallest member.
fn finite_components(d: &DistanceEstimate) -> Vec<Vec<usize>> {
    let n = d.n();
    let mut dsu = DisjointSet::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if d.get(u, v).is_finite() {
                dsu.union(u, v);
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let r = dsu.find(v);
        if index[r] == usize::MAX {
            index[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[index[r]].push(v);
    }
    comps
}

fn submatrix(d: &DistanceEstimate, vertices: &[usize]) -> DistanceEstimate {
    DistanceEstimate::from_fn(vertices.len(), |a, b| d.get(vertices[a], vertices[b]))
        .expect("principal submatrix of a valid distance matrix")
}

/// Chow-Liu++ on arbitrary-sign estimates.
pub fn learn_model(mu_tilde: &CorrelationMatrix, eps: f64) -> Result<TreeIsingModel> {
    learn_model_with(mu_tilde, eps, &LearnerConfig::default())
}

/// Runs the ferromagnetic learner on `|mu_tilde|` and then gives each output
/// edge the sign of its estimate (a zero estimate counts as positive).
pub fn learn_model_with(mu_tilde: &CorrelationMatrix, eps: f64, cfg: &LearnerConfig) -> Result<TreeIsingModel> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative and finite, got {eps}")));
    }
    if eps >= GUARANTEE_EPS_LIMIT {
        log::warn!("eps = {eps} is at or above {GUARANTEE_EPS_LIMIT}; the error guarantee is not established there");
    }
    let ferro = learn_ferro_model(&mu_tilde.abs(), eps, |sub, e| learn_lwr_bdd_model_with(sub, e, cfg))?;
    let theta = ferro
        .weighted_edges()
        .map(|(u, v, t)| if mu_tilde.get(u, v) < 0.0 { -t } else { t })
        .collect();
    TreeIsingModel::new(ferro.topology().clone(), theta)
}

/// Sign of the product of edge correlations along the `u`-`v` path.
pub fn sign_of_path_product(model: &TreeIsingModel, u: usize, v: usize) -> i8 {
    model.sign_of_path_product(u, v)
}

/// Summary of a sample-based fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub k: usize,
    /// `k * 2^k`, converting a pairwise radius into an order-`k` radius.
    pub factor: f64,
    /// Pairwise local TV between the learned model and the empirical correlations.
    pub loctv2_radius: f64,
    /// `factor * loctv2_radius`.
    pub loctvk_bound: f64,
}

/// Empirical correlations followed by [`learn_model`].
pub fn learn_from_samples(samples: &SampleMatrix, eps: f64, k: usize) -> Result<(TreeIsingModel, SampleReport)> {
    learn_from_samples_with(samples, eps, k, &LearnerConfig::default())
}

pub fn learn_from_samples_with(
    samples: &SampleMatrix,
    eps: f64,
    k: usize,
    cfg: &LearnerConfig,
) -> Result<(TreeIsingModel, SampleReport)> {
    if k < 2 || k > 30 {
        return Err(Error::InvalidParameter(format!("order k = {k} must lie in 2..=30")));
    }
    let mu = samples.empirical_correlations()?;
    let model = learn_model_with(&mu, eps, cfg)?;
    let radius = loctv2(&model.pairwise_correlations(), &mu)?;
    let factor = (k as f64) * 2f64.powi(k as i32);
    let report = SampleReport {
        m: samples.m(),
        n: samples.n(),
        eps,
        k,
        factor,
        loctv2_radius: radius,
        loctvk_bound: factor * radius,
    };
    Ok((model, report))
}
