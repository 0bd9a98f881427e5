//! Cross-checks run by `experiment --verify`. Each returns the list of
//! violated contracts; an empty list means everything held.

use chowliu::experiments::{random_model, trial_rng, FailureReport, LatentPoint, StructureReport};
use chowliu::metric::{subdominant_ultrametric, DistanceEstimate};
use chowliu::oracles::{brute_force_joint, joint_moments, minimax_path_closure};
use chowliu::Result;
use rand::Rng;

const TOL: f64 = 1e-12;

pub fn failure(r: &FailureReport) -> Vec<String> {
    let mut out = Vec::new();
    for p in &r.points {
        let expected = (1.0 - (-2.0 * p.delta).exp()) / 2.0;
        if (p.nearby_tree_loctv2 - expected).abs() > TOL {
            out.push(format!("delta={}: nearby tree at {} instead of {expected}", p.delta, p.nearby_tree_loctv2));
        }
        // The certificate bounds every model on the Chow-Liu tree, ours included.
        if p.chow_liu_loctv2 + TOL < p.chow_liu_certificate {
            out.push(format!("delta={}: Chow-Liu error below its own lower bound", p.delta));
        }
        if p.delta < 0.1 && p.n as f64 >= 1.0 / p.delta && p.chow_liu_certificate < 0.05 {
            out.push(format!("delta={}: certificate {} below 0.05", p.delta, p.chow_liu_certificate));
        }
        if p.delta <= 0.01 && p.chow_liu_pp_loctv2 >= 0.05 {
            out.push(format!("delta={}: Chow-Liu++ error {} is not below 0.05", p.delta, p.chow_liu_pp_loctv2));
        }
    }
    out
}

pub fn latent(points: &[LatentPoint]) -> Vec<String> {
    let mut out = Vec::new();
    for p in points {
        if (p.independent_x_loctv2 - p.delta / 2.0).abs() > TOL {
            out.push(format!("delta={}: independent-X model at {}", p.delta, p.independent_x_loctv2));
        }
        if p.chow_liu_pp_loctv2 > 10.0 * p.delta {
            out.push(format!("delta={}: Chow-Liu++ error {} exceeds 10 delta", p.delta, p.chow_liu_pp_loctv2));
        }
    }
    out
}

pub fn structure(r: &StructureReport) -> Vec<String> {
    if r.threshold_violations > 0 {
        vec![format!(
            "{} trials had loctv3 below alpha*beta/8 but a different topology",
            r.threshold_violations
        )]
    } else {
        Vec::new()
    }
}

/// Fast paths against brute force on small random instances.
pub fn oracles(seed: u64) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for trial in 0..10u64 {
        let mut rng = trial_rng(seed, trial);
        let n = rng.gen_range(2..=8);
        let model = random_model(n, &mut rng, |r| r.gen_range(0.0..=1.0), true);
        let joint = brute_force_joint(&model)?;
        let diff = joint_moments(&joint).max_abs_diff(&model.pairwise_correlations())?;
        if diff > TOL {
            out.push(format!("pairwise correlations differ from brute force by {diff}"));
        }
        let all: Vec<usize> = (0..n).collect();
        let tv = joint.tv(&model.marginal_joint(&all)?);
        if tv > TOL {
            out.push(format!("full marginal differs from brute force by {tv}"));
        }
        let a = DistanceEstimate::from_fn(3 * n, |_, _| rng.gen_range(0.0..10.0))?;
        if subdominant_ultrametric(&a)?.to_matrix() != minimax_path_closure(&a)? {
            out.push("subdominant ultrametric differs from minimax closure".into());
        }
    }
    Ok(out)
}
