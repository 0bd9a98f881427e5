#![allow(dead_code)]

use chowliu::experiments::{random_model, random_topology, trial_rng};
use chowliu::metric::{DistanceEstimate, WeightedTree};
use chowliu::TreeIsingModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    trial_rng(seed, 0)
}

/// Random model with magnitudes uniform in `[lo, hi]` and random signs when asked.
pub fn model_in(n: usize, lo: f64, hi: f64, signs: bool, seed: u64) -> TreeIsingModel {
    random_model(n, &mut rng(seed), |r| r.gen_range(lo..=hi), signs)
}

/// Random model with magnitudes picked from a fixed menu.
pub fn model_from_menu(n: usize, menu: &[f64], signs: bool, seed: u64) -> TreeIsingModel {
    random_model(n, &mut rng(seed), |r| menu[r.gen_range(0..menu.len())], signs)
}

/// Random weighted tree with edge lengths in `(0, max_len]`.
pub fn weighted_tree(n: usize, max_len: f64, seed: u64) -> WeightedTree {
    let mut r = rng(seed);
    let topology = random_topology(n, &mut r);
    let lengths = (1..n).map(|_| max_len * (1.0 - r.gen::<f64>())).collect();
    WeightedTree::new(topology, lengths).unwrap()
}

/// Symmetric matrix with independent entries drawn by `draw`.
pub fn random_dissimilarity(n: usize, seed: u64, mut draw: impl FnMut(&mut ChaCha8Rng) -> f64) -> DistanceEstimate {
    let mut r = rng(seed);
    DistanceEstimate::from_fn(n, |_, _| draw(&mut r)).unwrap()
}

pub fn max_abs_diff(a: &DistanceEstimate, b: &DistanceEstimate) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
