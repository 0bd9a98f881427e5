mod common;

use chowliu::{
    learn_ferro_model, learn_from_samples, learn_lwr_bdd_model, learn_model, loctv2, perturb, sign_of_path_product,
    CorrelationMatrix, PerturbMode, TreeIsingModel, TreeTopology,
};
use common::{model_from_menu, model_in, rng};
use proptest::prelude::*;
use rand::Rng;

/// Largest `loctv2 / eps` seen for sample-based fits with Chernoff-sized `m`
/// was 0.87 over 100 trials; 1 is the recorded constant.
const SAMPLE_FIT_CONSTANT: f64 = 1.0;

/// Upper end of `max error / eps` seen in the adversarial scaling sweeps (~16).
const RECORDED_C: f64 = 20.0;

#[test]
fn bounded_below_learner_examples() {
    let two = CorrelationMatrix::from_fn(2, |_, _| 0.9).unwrap();
    let m = learn_lwr_bdd_model(&two, 1e-7).unwrap();
    assert!((0.899..=0.901).contains(&m.theta()[0]));

    let path = TreeIsingModel::new(TreeTopology::path(4), vec![0.5; 3]).unwrap().pairwise_correlations();
    let m = learn_lwr_bdd_model(&path, 1e-7).unwrap();
    assert!(m.pairwise_correlations().max_abs_diff(&path).unwrap() <= 1e-3);

    let star = TreeIsingModel::new(TreeTopology::star(10, 0), vec![0.9; 9]).unwrap().pairwise_correlations();
    let m = learn_lwr_bdd_model(&star, 1e-6).unwrap();
    assert!(m.pairwise_correlations().max_abs_diff(&star).unwrap() <= 1e-3);
}

#[test]
fn learn_model_examples() {
    let zero = CorrelationMatrix::identity(6);
    let m = learn_model(&zero, 1e-4).unwrap();
    assert_eq!(m.topology().edges().len(), 5);
    assert!(m.theta().iter().all(|&t| t == 0.0));
    assert_eq!(loctv2(&m.pairwise_correlations(), &TreeIsingModel::independent(6).pairwise_correlations()).unwrap(), 0.0);

    let ferro = model_in(15, 0.0, 1.0, false, 9).pairwise_correlations();
    assert_eq!(learn_model(&ferro, 1e-4).unwrap(), learn_ferro_model(&ferro, 1e-4, learn_lwr_bdd_model).unwrap());

    assert!(learn_model(&ferro, -1.0).is_err());
    assert!(learn_model(&ferro, f64::NAN).is_err());
}

#[test]
fn adversarial_corruption_costs_linear_error() {
    let eps = 1e-4;
    for seed in 0..30 {
        let truth = model_from_menu(30, &[0.05, 0.5, 0.95], true, seed);
        let mode = [PerturbMode::RandomSign, PerturbMode::TowardZero, PerturbMode::AwayFromZero][seed as usize % 3];
        let noisy = perturb(&truth.pairwise_correlations(), eps, seed, mode).unwrap();
        let learned = learn_model(&noisy, eps).unwrap();
        let err = loctv2(&learned.pairwise_correlations(), &truth.pairwise_correlations()).unwrap();
        assert!(err <= 500.0 * eps, "seed {seed}: {err}");
    }
}

#[test]
fn sample_pipeline_examples() {
    let hard = TreeIsingModel::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    let (m, _) = learn_from_samples(&hard.sample(500, 1).unwrap(), 0.0, 2).unwrap();
    assert_eq!(m.weighted_edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);

    let truth = model_in(6, 0.2, 0.8, true, 2);
    let (_, report) = learn_from_samples(&truth.sample(2000, 3).unwrap(), 0.05, 3).unwrap();
    assert_eq!(report.factor, 24.0);
    assert_eq!(report.loctvk_bound, 24.0 * report.loctv2_radius);
    assert_eq!((report.m, report.n, report.k), (2000, 6, 3));
    assert!(learn_from_samples(&truth.sample(10, 3).unwrap(), 0.05, 1).is_err());
}

#[test]
fn chernoff_sized_sample_fits() {
    let eps = 0.1;
    let m = (16.0 * (40.0f64 / 0.05).ln() / (eps * eps)).ceil() as usize;
    let mut successes = 0;
    for trial in 0..100u64 {
        let truth = model_in(20, 0.0, 1.0, true, 5000 + trial);
        let (learned, _) = learn_from_samples(&truth.sample(m, trial).unwrap(), eps, 3).unwrap();
        let err = loctv2(&learned.pairwise_correlations(), &truth.pairwise_correlations()).unwrap();
        if err <= SAMPLE_FIT_CONSTANT * eps {
            successes += 1;
        }
    }
    assert!(successes >= 95, "{successes} of 100");
}

#[test]
fn path_sign_examples() {
    let a = TreeIsingModel::new(TreeTopology::path(3), vec![-0.5, -0.2]).unwrap();
    assert_eq!(sign_of_path_product(&a, 0, 2), 1);
    let b = TreeIsingModel::new(TreeTopology::path(5), vec![-0.5, 0.3, -0.2, -0.9]).unwrap();
    assert_eq!(sign_of_path_product(&b, 0, 4), -1);
    assert_eq!(sign_of_path_product(&b, 1, 2), 1);
    let z = TreeIsingModel::new(TreeTopology::path(3), vec![0.0, -0.2]).unwrap();
    assert_eq!(sign_of_path_product(&z, 0, 2), 0);
    assert_eq!(sign_of_path_product(&z, 1, 2), -1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sign_products_telescope(n in 2usize..=10, seed: u64, walk in proptest::collection::vec(0usize..10, 2..8)) {
        let m = model_in(n, 0.01, 1.0, true, seed);
        let mu = m.pairwise_correlations();
        let walk: Vec<usize> = walk.into_iter().map(|w| w % n).collect();
        let sign = |x: f64| if x > 0.0 { 1 } else { -1 };
        let product: i32 = walk.windows(2).map(|w| sign(mu.get(w[0], w[1]))).product();
        prop_assert_eq!(product, sign(mu.get(walk[0], *walk.last().unwrap())));
        prop_assert_eq!(i32::from(sign_of_path_product(&m, walk[0], walk[1])), sign(mu.get(walk[0], walk[1])));
    }

    #[test]
    fn learning_is_deterministic(n in 1usize..40, seed: u64, eps in 1e-6f64..1e-2) {
        let truth = model_in(n, 0.0, 1.0, true, seed);
        let noisy = perturb(&truth.pairwise_correlations(), eps, seed, PerturbMode::RandomSign).unwrap();
        let a = learn_model(&noisy, eps).unwrap();
        let b = learn_model(&noisy, eps).unwrap();
        prop_assert_eq!(a.topology(), b.topology());
        prop_assert!(a.theta().iter().zip(b.theta()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn ferro_consistency(n in 1usize..40, seed: u64, eps in 1e-6f64..1e-2) {
        let truth = model_in(n, 0.0, 1.0, true, seed);
        let abs = perturb(&truth.pairwise_correlations(), eps, seed, PerturbMode::RandomSign).unwrap().abs();
        prop_assert_eq!(learn_model(&abs, eps).unwrap(), learn_ferro_model(&abs, eps, learn_lwr_bdd_model).unwrap());
    }

    #[test]
    fn strong_outputs_have_correct_signs(n in 2usize..40, seed: u64) {
        let eps = 1e-4;
        let truth = model_from_menu(n, &[0.01, 0.05, 0.3, 0.5, 0.95, 0.99], true, seed);
        let mu = truth.pairwise_correlations();
        let mode = [PerturbMode::RandomSign, PerturbMode::TowardZero, PerturbMode::AwayFromZero][(seed % 3) as usize];
        let noisy = perturb(&mu, eps, seed, mode).unwrap();
        let mu_hat = learn_model(&noisy, eps).unwrap().pairwise_correlations();
        for u in 0..n {
            for v in 0..n {
                if mu_hat.get(u, v).abs() > (RECORDED_C + 1.0) * eps {
                    prop_assert_eq!(mu_hat.get(u, v) > 0.0, mu.get(u, v) > 0.0, "pair ({}, {})", u, v);
                }
            }
        }
    }

    #[test]
    fn very_weak_true_edges_stay_very_weak(n in 2usize..40, seed: u64) {
        let eps = 1e-4;
        let mut r = rng(seed);
        let truth = model_from_menu(n, &[0.0, eps, 2.0 * eps, 4.0 * eps, 0.05, 0.5, 0.9], true, seed);
        let noisy = perturb(&truth.pairwise_correlations(), eps, r.gen(), PerturbMode::RandomSign).unwrap();
        let learned = learn_model(&noisy, eps).unwrap();
        for u in 0..n {
            for v in u + 1..n {
                let true_path = truth.topology().path_edges(u, v);
                if true_path.iter().any(|&e| truth.theta()[e].abs() <= 4.0 * eps) {
                    let out_path = learned.topology().path_edges(u, v);
                    prop_assert!(
                        out_path.iter().any(|&e| learned.theta()[e].abs() <= 5.0 * eps),
                        "pair ({}, {}) lost its weak link", u, v
                    );
                }
            }
        }
    }
}
