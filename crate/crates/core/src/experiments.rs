//! Reproducible experiment harness: the Chow-Liu misspecification failure,
//! a latent-variable counterexample for pure metric reconstruction, structure
//! recovery from samples, and the noise-scaling sweep.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial)`, so
//! results are bit-for-bit reproducible from the configuration.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chow_liu::chow_liu_model;
use crate::error::{Error, Result};
use crate::learner::{learn_from_samples_with, learn_model_with, LearnerConfig};
use crate::model::{loctv2, loctv_k_exact, perturb, CorrelationMatrix, PerturbMode, TreeIsingModel, TreeTopology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Failure,
    Structure,
    Scaling,
    Latent,
}

/// Experiment parameters as read from a JSON config. Unset fields take
/// per-experiment defaults (see [`ExperimentConfig::resolve`]).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    /// Misspecification levels (failure and latent experiments).
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    /// Chain length for the failure instance, vertex count otherwise. For the
    /// failure experiment an unset `n` means `ceil(1/delta)`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Sample count; when unset the structure experiment uses
    /// `ceil(c0 * ln(n) / (alpha * beta)^2)`.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Learner tolerance for the structure experiment; unset means a
    /// union-bound Hoeffding radius for all pairs.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_grid: Option<Vec<f64>>,
    /// Edge magnitudes drawn by the scaling experiment.
    #[serde(default)]
    pub magnitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub perturb_mode: Option<PerturbMode>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub learner: Option<LearnerConfig>,
}

/// Fully specified parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub kind: ExperimentKind,
    pub deltas: Vec<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub c0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: Option<f64>,
    pub eps_grid: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub perturb_mode: PerturbMode,
    pub trials: usize,
    pub seed: u64,
    pub learner: LearnerConfig,
}

/// Default structure-experiment sample constant.
pub const DEFAULT_C0: f64 = 1000.0;

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Fills defaults for `kind` and checks that every numeric parameter is
    /// positive and `trials >= 1`.
    pub fn resolve(&self, kind: ExperimentKind) -> Result<ResolvedConfig> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(Error::InvalidParameter(format!("config is for {k:?}, not {kind:?}")));
            }
        }
        let default_deltas = match kind {
            ExperimentKind::Latent => vec![0.01],
            _ => vec![0.01, 0.005, 0.002],
        };
        let default_n = match kind {
            ExperimentKind::Failure | ExperimentKind::Latent => None,
            ExperimentKind::Structure => Some(20),
            ExperimentKind::Scaling => Some(50),
        };
        let default_trials = match kind {
            ExperimentKind::Structure => 100,
            ExperimentKind::Scaling => 20,
            _ => 1,
        };
        let r = ResolvedConfig {
            kind,
            deltas: self.deltas.clone().unwrap_or(default_deltas),
            n: self.n.or(default_n),
            m: self.m,
            c0: self.c0.unwrap_or(DEFAULT_C0),
            alpha: self.alpha.unwrap_or(0.2),
            beta: self.beta.unwrap_or(0.2),
            eps: self.eps,
            eps_grid: self.eps_grid.clone().unwrap_or_else(|| vec![1e-3, 1e-4, 1e-5]),
            magnitudes: self.magnitudes.clone().unwrap_or_else(|| vec![0.01, 0.5, 0.99]),
            perturb_mode: self.perturb_mode.unwrap_or(PerturbMode::RandomSign),
            trials: self.trials.unwrap_or(default_trials),
            seed: self.seed,
            learner: self.learner.unwrap_or_default(),
        };
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
            }
        };
        for &d in &r.deltas {
            positive("delta", d)?;
        }
        for &e in &r.eps_grid {
            positive("eps", e)?;
        }
        for &t in &r.magnitudes {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidParameter(format!("edge magnitude {t} outside (0, 1]")));
            }
        }
        positive("c0", r.c0)?;
        positive("alpha", r.alpha)?;
        positive("beta", r.beta)?;
        if let Some(e) = r.eps {
            positive("eps", e)?;
        }
        if r.n == Some(0) || r.m == Some(0) || r.trials == 0 {
            return Err(Error::InvalidParameter("n, m and trials must be at least 1".into()));
        }
        if r.deltas.is_empty() || r.eps_grid.is_empty() || r.magnitudes.is_empty() {
            return Err(Error::InvalidParameter("parameter lists must be nonempty".into()));
        }
        Ok(r)
    }
}

/// RNG for one trial: the master seed selects the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniformly labeled random recursive tree.
pub fn random_topology<R: Rng>(n: usize, rng: &mut R) -> TreeTopology {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let edges = (1..n).map(|i| (order[i], order[rng.gen_range(0..i)])).collect();
    TreeTopology::new(n, edges).expect("random recursive tree is a tree")
}

/// Random model on a random tree, with magnitudes from `magnitude` and random signs.
pub fn random_model<R: Rng>(
    n: usize,
    rng: &mut R,
    mut magnitude: impl FnMut(&mut R) -> f64,
    random_signs: bool,
) -> TreeIsingModel {
    let topology = random_topology(n, rng);
    let theta = (1..n)
        .map(|_| {
            let t = magnitude(rng);
            if random_signs && rng.gen::<bool>() {
                -t
            } else {
                t
            }
        })
        .collect();
    TreeIsingModel::new(topology, theta).expect("magnitudes lie in [0, 1]")
}

fn x_index(i: usize) -> usize {
    i - 1
}

fn y_index(n: usize, i: usize) -> usize {
    n + i - 1
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 0.1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta must lie in (0, 0.1], got {delta}")))
    }
}

/// Correlations of the misspecified chain on `X_1..X_n` (indices `0..n`) and
/// `Y_1..Y_n` (indices `n..2n`): `E[X_i X_j] = E[Y_i Y_j] = exp(-delta |i-j|)`
/// and `E[X_i Y_j] = exp(-delta |i-j| - 2 delta)`.
pub fn gen_cl_failure_correlations(delta: f64, n: usize) -> Result<CorrelationMatrix> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::InvalidParameter("chain length must be at least 1".into()));
    }
    CorrelationMatrix::from_fn(2 * n, |a, b| {
        let (i, j) = (a % n, b % n);
        let gap = i.abs_diff(j) as f64;
        let cross = if (a < n) != (b < n) { 2.0 * delta } else { 0.0 };
        (-delta * gap - cross).exp()
    })
}

/// Tree model close to the failure instance: the path `X_1, Y_1, X_2, Y_2, ...`
/// with `theta(X_i, Y_i) = 1` and `theta(Y_i, X_{i+1}) = exp(-delta)`.
pub fn cl_failure_tree_model(delta: f64, n: usize) -> Result<TreeIsingModel> {
    check_delta(delta)?;
    let mut edges = Vec::with_capacity(2 * n - 1);
    for i in 1..=n {
        edges.push((x_index(i), y_index(n, i), 1.0));
        if i < n {
            edges.push((y_index(n, i), x_index(i + 1), (-delta).exp()));
        }
    }
    TreeIsingModel::from_edges(2 * n, &edges)
}

/// Lower bound on `loctv2(Q, P)` valid for every `Q` structured on a tree made
/// of the two chains plus the cross edge `(X_i, Y_j)` (1-based indices).
pub fn cl_failure_certificate(delta: f64, n: usize, i: usize, j: usize) -> f64 {
    let top = (-2.0 * delta).exp();
    // E_Q[X_n Y_n] factors through X_i and through Y_j; E_Q[X_1 Y_1] likewise.
    let gaps = [n - i, n - j, i - 1, j - 1];
    gaps.iter().map(|&g| (top - (-delta * g as f64).exp()) / 4.0).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailurePoint {
    pub delta: f64,
    pub n: usize,
    /// `loctv2` between the nearby tree model and the instance.
    pub nearby_tree_loctv2: f64,
    /// Cross edge of the Chow-Liu tree as 1-based `(i, j)` for `(X_i, Y_j)`.
    pub cross_edge: Option<(usize, usize)>,
    pub chow_liu_loctv2: f64,
    /// Bound that holds for every model on the Chow-Liu tree.
    pub chow_liu_certificate: f64,
    pub chow_liu_pp_loctv2: f64,
    pub eps: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub points: Vec<FailurePoint>,
    /// Chow-Liu++ error is nonincreasing along the (descending) delta sweep.
    pub chow_liu_pp_monotone: bool,
}

/// Fits Chow-Liu (with `theta_e = mu_e`) and Chow-Liu++ (with `eps = 2 delta`)
/// to the exact failure-instance correlations.
pub fn run_failure_point(delta: f64, n: Option<usize>, learner: &LearnerConfig) -> Result<FailurePoint> {
    check_delta(delta)?;
    let n = n.unwrap_or_else(|| (1.0 / delta).ceil() as usize);
    let start = Instant::now();
    let mu = gen_cl_failure_correlations(delta, n)?;
    let nearby = cl_failure_tree_model(delta, n)?;
    let cl = chow_liu_model(&mu)?;
    let cross_edge = cl.topology().edges().iter().find_map(|&(a, b)| {
        ((a < n) != (b < n)).then(|| (a.min(b) + 1, a.max(b) - n + 1))
    });
    let certificate = cross_edge.map_or(f64::NAN, |(i, j)| cl_failure_certificate(delta, n, i, j));
    let eps = 2.0 * delta;
    let learned = learn_model_with(&mu, eps, learner)?;
    let point = FailurePoint {
        delta,
        n,
        nearby_tree_loctv2: loctv2(&nearby.pairwise_correlations(), &mu)?,
        cross_edge,
        chow_liu_loctv2: loctv2(&cl.pairwise_correlations(), &mu)?,
        chow_liu_certificate: certificate,
        chow_liu_pp_loctv2: loctv2(&learned.pairwise_correlations(), &mu)?,
        eps,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(point)
}

pub fn run_failure_experiment(cfg: &ResolvedConfig) -> Result<FailureReport> {
    let points = cfg
        .deltas
        .iter()
        .map(|&d| run_failure_point(d, cfg.n, &cfg.learner))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<&FailurePoint> = points.iter().collect();
    sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let chow_liu_pp_monotone = sorted.windows(2).all(|w| w[1].chow_liu_pp_loctv2 <= w[0].chow_liu_pp_loctv2);
    Ok(FailureReport { points, chow_liu_pp_monotone })
}

/// Three variables `(X, Y_1, Y_2)` with `E[Y_1 Y_2] = 1/4` and
/// `E[X Y_1] = E[X Y_2] = delta`: the marginal of a tree with a latent node.
pub fn gen_latent_counterexample(delta: f64) -> Result<CorrelationMatrix> {
    if !(delta > 0.0 && delta <= 0.125) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1/8], got {delta}")));
    }
    CorrelationMatrix::from_fn(3, |u, _| if u == 0 { delta } else { 0.25 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentPoint {
    pub delta: f64,
    /// `loctv2` to the tree model with `X` independent of `(Y_1, Y_2)`.
    pub independent_x_loctv2: f64,
    pub chow_liu_pp_loctv2: f64,
    pub learned: Vec<(usize, usize, f64)>,
}

pub fn run_latent_experiment(cfg: &ResolvedConfig) -> Result<Vec<LatentPoint>> {
    cfg.deltas
        .iter()
        .map(|&delta| {
            let mu = gen_latent_counterexample(delta)?;
            let tree = TreeIsingModel::from_edges(3, &[(1, 2, 0.25), (0, 1, 0.0)])?;
            let learned = learn_model_with(&mu, delta, &cfg.learner)?;
            Ok(LatentPoint {
                delta,
                independent_x_loctv2: loctv2(&tree.pairwise_correlations(), &mu)?,
                chow_liu_pp_loctv2: loctv2(&learned.pairwise_correlations(), &mu)?,
                learned: learned.weighted_edges().collect(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureTrial {
    pub trial: usize,
    pub recovered: bool,
    pub loctv2_vs_truth: f64,
    /// Exact order-3 local TV to the truth (only for `n <= 12`).
    pub loctv3_vs_truth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub trials: Vec<StructureTrial>,
    pub recovery_rate: f64,
    /// `alpha * beta / 8`.
    pub loctv3_threshold: f64,
    /// Recovered trials whose `loctv3` is not below the threshold.
    pub recovered_above_threshold: usize,
    /// Trials with `loctv3` below the threshold but a wrong topology; a
    /// nonzero value contradicts the identifiability guarantee.
    pub threshold_violations: usize,
}

/// Hoeffding radius such that all `n(n-1)/2` empirical correlations from `m`
/// samples are accurate with probability at least `1 - fail`.
pub fn hoeffding_radius(n: usize, m: usize, fail: f64) -> f64 {
    let pairs = (n * n.saturating_sub(1) / 2).max(1) as f64;
    (2.0 * (2.0 * pairs / fail).ln() / m as f64).sqrt()
}

pub fn structure_sample_count(c0: f64, n: usize, alpha: f64, beta: f64) -> usize {
    (c0 * (n as f64).ln() / (alpha * beta).powi(2)).ceil().max(1.0) as usize
}

/// Random trees with magnitudes uniform in `[alpha, 1 - beta]` and random
/// signs; learns from `m` samples and compares topologies.
pub fn run_structure_experiment(cfg: &ResolvedConfig) -> Result<StructureReport> {
    let n = cfg.n.unwrap_or(20);
    if !(cfg.alpha < 1.0 && cfg.beta < 1.0 && cfg.alpha <= 1.0 - cfg.beta) {
        return Err(Error::InvalidParameter("need alpha, beta in (0, 1) with alpha <= 1 - beta".into()));
    }
    let m = cfg.m.unwrap_or_else(|| structure_sample_count(cfg.c0, n, cfg.alpha, cfg.beta));
    let eps = cfg.eps.unwrap_or_else(|| hoeffding_radius(n, m, 0.05));
    let threshold = cfg.alpha * cfg.beta / 8.0;
    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let (lo, hi) = (cfg.alpha, 1.0 - cfg.beta);
        let truth = random_model(n, &mut rng, |r| r.gen_range(lo..=hi), true);
        let samples = truth.sample(m, rng.gen())?;
        let (learned, _) = learn_from_samples_with(&samples, eps, 3, &cfg.learner)?;
        let recovered = learned.topology().same_edges(truth.topology());
        let loctv3 = if n <= 12 && n >= 3 { Some(loctv_k_exact(&learned, &truth, 3)?) } else { None };
        trials.push(StructureTrial {
            trial: t,
            recovered,
            loctv2_vs_truth: loctv2(&learned.pairwise_correlations(), &truth.pairwise_correlations())?,
            loctv3_vs_truth: loctv3,
        });
    }
    let recovered = trials.iter().filter(|t| t.recovered).count();
    let above = trials.iter().filter(|t| t.recovered && t.loctv3_vs_truth.is_some_and(|v| v >= threshold)).count();
    let violations =
        trials.iter().filter(|t| !t.recovered && t.loctv3_vs_truth.is_some_and(|v| v < threshold)).count();
    Ok(StructureReport {
        n,
        m,
        eps,
        alpha: cfg.alpha,
        beta: cfg.beta,
        recovery_rate: recovered as f64 / trials.len() as f64,
        trials,
        loctv3_threshold: threshold,
        recovered_above_threshold: above,
        threshold_violations: violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub trial: usize,
    pub max_error: f64,
    pub observed_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub n: usize,
    pub rows: Vec<ScalingRow>,
    /// Largest `max_error / eps` over the grid.
    pub max_observed_c: f64,
    /// Trials whose error increased when eps decreased.
    pub monotonicity_failures: Vec<usize>,
}

impl ScalingReport {
    /// Plot-ready CSV with columns `eps,trial,max_error,observed_C`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,trial,max_error,observed_C\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{},{:e},{}\n", r.eps, r.trial, r.max_error, r.observed_c));
        }
        s
    }
}

/// For each trial, one random signed tree (magnitudes drawn from
/// `cfg.magnitudes`) and one corruption seed are reused across the whole
/// `eps` grid; records the largest pairwise correlation error over `eps`.
pub fn run_scaling_experiment(cfg: &ResolvedConfig) -> Result<ScalingReport> {
    let n = cfg.n.unwrap_or(50);
    let mut rows = Vec::new();
    let mut monotonicity_failures = Vec::new();
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let mags = cfg.magnitudes.clone();
        let truth = random_model(n, &mut rng, |r| *mags.choose(r).expect("nonempty"), true);
        let mu = truth.pairwise_correlations();
        let perturb_seed: u64 = rng.gen();
        let mut errors = Vec::with_capacity(cfg.eps_grid.len());
        for &eps in &cfg.eps_grid {
            let noisy = perturb(&mu, eps, perturb_seed, cfg.perturb_mode)?;
            let learned = learn_model_with(&noisy, eps, &cfg.learner)?;
            let err = learned.pairwise_correlations().max_abs_diff(&mu)?;
            errors.push((eps, err));
            rows.push(ScalingRow { eps, trial: t, max_error: err, observed_c: err / eps });
        }
        errors.sort_by(|a, b| b.0.total_cmp(&a.0));
        if errors.windows(2).any(|w| w[1].1 > w[0].1) {
            monotonicity_failures.push(t);
        }
    }
    let max_observed_c = rows.iter().map(|r| r.observed_c).fold(0.0, f64::max);
    Ok(ScalingReport { n, rows, max_observed_c, monotonicity_failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_entries() {
        let mu = gen_cl_failure_correlations(0.1, 10).unwrap();
        assert!((mu.get(x_index(1), x_index(2)) - 0.904837).abs() < 1e-6);
        assert!((mu.get(x_index(4), y_index(10, 4)) - (-0.2f64).exp()).abs() < 1e-15);
        assert!(gen_cl_failure_correlations(0.2, 10).is_err());
        assert!(gen_cl_failure_correlations(0.0, 10).is_err());
    }

    #[test]
    fn nearby_tree_distance() {
        let mu = gen_cl_failure_correlations(0.1, 10).unwrap();
        let tree = cl_failure_tree_model(0.1, 10).unwrap();
        let d = loctv2(&tree.pairwise_correlations(), &mu).unwrap();
        assert!((d - (1.0 - (-0.2f64).exp()) / 2.0).abs() < 1e-12);
        assert!((d - 0.090635).abs() < 1e-6);
    }

    #[test]
    fn latent_entries() {
        let mu = gen_latent_counterexample(0.01).unwrap();
        assert_eq!((mu.get(0, 1), mu.get(0, 2), mu.get(1, 2)), (0.01, 0.01, 0.25));
        assert!(gen_latent_counterexample(0.2).is_err());
    }

    #[test]
    fn config_resolution() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "scaling", "n": 10, "trials": 2}"#).unwrap();
        let r = cfg.resolve(ExperimentKind::Scaling).unwrap();
        assert_eq!(r.n, Some(10));
        assert!(cfg.resolve(ExperimentKind::Failure).is_err());
        assert!(ExperimentConfig::from_json(r#"{"trials": 0}"#).unwrap().resolve(ExperimentKind::Latent).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig { alpha: Some(-1.0), ..Default::default() }
            .resolve(ExperimentKind::Structure)
            .is_err());
    }

    #[test]
    fn random_trees_are_reproducible() {
        let a = random_topology(30, &mut trial_rng(5, 3));
        let b = random_topology(30, &mut trial_rng(5, 3));
        let c = random_topology(30, &mut trial_rng(5, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
