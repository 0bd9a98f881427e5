mod common;

use chowliu::metric::{
    additive_metric_reconstruction, c_radius, desteinerize, evolutionary_estimate, prune_steiner,
    shortest_paths_from_root, subdominant_ultrametric, tree_metric_reconstruction, ultra_minus_centroid,
    CentroidMetric, Dendrogram, DistanceEstimate, SteinerTree,
};
use chowliu::oracles::{all_pairs_shortest_paths, minimax_path_closure};
use chowliu::{CorrelationMatrix, Error};
use common::{max_abs_diff, random_dissimilarity, rng, weighted_tree};
use proptest::prelude::*;
use rand::Rng;

/// Tree distances plus noise in `[0, eps]`, infinite where the noisy value exceeds `3L`.
fn noisy_input(d: &DistanceEstimate, l: f64, eps: f64, seed: u64) -> DistanceEstimate {
    let mut r = rng(seed);
    DistanceEstimate::from_fn(d.n(), |u, v| {
        let x = d.get(u, v) + eps * r.gen::<f64>();
        if x > 3.0 * l {
            f64::INFINITY
        } else {
            x
        }
    })
    .unwrap()
}

#[test]
fn evolutionary_estimate_examples() {
    let mu = CorrelationMatrix::from_fn(3, |u, v| match (u, v) {
        (0, 1) => 1.0,
        (0, 2) => 0.5,
        _ => 0.01,
    })
    .unwrap();
    let exact = evolutionary_estimate(&mu, 0.0).unwrap();
    assert_eq!(exact.get(0, 1), 0.0);
    let d = evolutionary_estimate(&mu, 0.01).unwrap();
    assert!((d.get(0, 2) - 0.71335).abs() < 1e-5);
    assert!(d.get(1, 2).is_infinite());
    assert_eq!(d.get(2, 2), 0.0);
    assert!(evolutionary_estimate(&mu, -0.1).is_err());
}

#[test]
fn shortest_path_examples() {
    let metric = weighted_tree(12, 1.0, 3).distances();
    let row = shortest_paths_from_root(&metric, 4);
    assert!(row.iter().zip(metric.row(4)).all(|(a, b)| (a - b).abs() <= 1e-12));
    let d = DistanceEstimate::from_fn(3, |u, v| match (u, v) {
        (0, 1) => 1.0,
        (0, 2) => 5.0,
        _ => 1.0,
    })
    .unwrap();
    assert_eq!(shortest_paths_from_root(&d, 0), vec![0.0, 1.0, 2.0]);
}

#[test]
fn amr_examples() {
    let path = DistanceEstimate::from_fn(4, |u, v| (v - u) as f64).unwrap();
    let out = additive_metric_reconstruction(&path, 1.5, 0.0).unwrap();
    assert!(max_abs_diff(&out.steiner.labeled_distances(), &path) <= 1e-9);

    let two = DistanceEstimate::from_fn(2, |_, _| 0.42).unwrap();
    let out = additive_metric_reconstruction(&two, 1.0, 1e-3).unwrap();
    assert!((out.steiner.labeled_distances().get(0, 1) - 0.42).abs() < 1e-12);

    let split = DistanceEstimate::from_fn(3, |u, v| if u == 2 || v == 2 { f64::INFINITY } else { 1.0 }).unwrap();
    assert!(matches!(
        additive_metric_reconstruction(&split, 1.0, 1e-3),
        Err(Error::Unreachable { vertex: 2, root: 0 })
    ));
    assert!(additive_metric_reconstruction(&two, 0.0, 1e-3).is_err());
    assert!(additive_metric_reconstruction(&two, 1.0, -1e-3).is_err());
}

#[test]
fn amr_meets_error_bounds_and_root_row() {
    let (l, eps) = (1.0, 1e-3);
    for seed in 0..20 {
        let d = weighted_tree(40, l, seed).distances();
        let d_pre = noisy_input(&d, l, eps, seed + 100);
        let out = additive_metric_reconstruction(&d_pre, l, eps).unwrap();
        assert!(out.diagnostics.hypotheses_hold);
        assert!(out.diagnostics.root_row_ok);
        assert!(out.steiner.n_steiner() <= 40);
        let d_hat = out.steiner.labeled_distances();
        for u in 0..40 {
            for v in u + 1..40 {
                let (x, y) = (d.get(u, v), d_hat.get(u, v));
                assert!(y - x <= (2.0 * x / l + 90.0) * eps);
                assert!(x - y <= (2.0 * x / l + 36.0) * eps);
            }
        }
    }
}

#[test]
fn subdominant_examples() {
    let a = DistanceEstimate::from_fn(3, |u, v| match (u, v) {
        (0, 1) => 1.0,
        (0, 2) => 3.0,
        _ => 2.0,
    })
    .unwrap();
    let e = subdominant_ultrametric(&a).unwrap();
    assert_eq!((e.e(0, 1), e.e(0, 2), e.e(1, 2)), (1.0, 2.0, 2.0));

    let ultra = DistanceEstimate::from_fn(5, |u, v| if u / 2 == v / 2 { 1.0 } else { 4.0 }).unwrap();
    assert_eq!(subdominant_ultrametric(&ultra).unwrap().to_matrix(), ultra);
}

#[test]
fn ultra_minus_centroid_examples() {
    let e = Dendrogram::from_merges(3, &[(0, 1, 1.0), (3, 2, 3.0)]).unwrap();
    let zero = CentroidMetric { ell: vec![0.0; 3], d_max: 0.0 };
    let t = ultra_minus_centroid(&e, &zero, 0).unwrap();
    let d = t.tree.labeled_distances();
    assert!((d.get(0, 1) - 1.0).abs() < 1e-12 && (d.get(1, 2) - 3.0).abs() < 1e-12);

    let e = Dendrogram::from_merges(2, &[(0, 1, 4.0)]).unwrap();
    let c = CentroidMetric { ell: vec![1.0, 0.5], d_max: 2.0 };
    let t = ultra_minus_centroid(&e, &c, 0).unwrap();
    assert!((t.tree.labeled_distances().get(0, 1) - 2.5).abs() < 1e-12);
    assert_eq!(t.leaf_clamps, 0);
}

#[test]
fn desteinerize_examples() {
    let spliced = SteinerTree::new(2, 3, vec![(0, 2, 1.0), (2, 1, 2.0)], 0).unwrap();
    let out = desteinerize(&spliced).unwrap();
    assert_eq!(out.tree.topology.edges(), &[(0, 1)]);
    assert!((out.tree.lengths[0] - 3.0).abs() < 1e-12);

    let plain = SteinerTree::new(3, 3, vec![(0, 1, 0.5), (1, 2, 0.25)], 0).unwrap();
    let out = desteinerize(&plain).unwrap();
    assert_eq!(out.tree.topology.edges(), &[(0, 1), (1, 2)]);
    assert_eq!(out.tree.lengths, vec![0.5, 0.25]);
    assert_eq!(out.c_radius, 0.0);

    let hub = SteinerTree::new(3, 4, vec![(3, 0, 0.1), (3, 1, 5.0), (3, 2, 7.0)], 0).unwrap();
    let out = desteinerize(&hub).unwrap();
    assert_eq!(out.tree.topology.edges(), &[(0, 1), (0, 2)]);
    let before = hub.labeled_distances();
    let after = out.tree.distances();
    assert!(max_abs_diff(&before, &after) <= 12.0 * 0.1);
    assert!((out.c_radius - 0.1).abs() < 1e-15);
}

#[test]
fn c_radius_examples() {
    let none = SteinerTree::new(2, 2, vec![(0, 1, 1.0)], 0).unwrap();
    assert_eq!(c_radius(&none), 0.0);
    let one = SteinerTree::new(2, 3, vec![(0, 2, 0.3), (2, 1, 0.8)], 0).unwrap();
    assert!((c_radius(&one) - 0.3).abs() < 1e-15);
}

#[test]
fn pipeline_c_radius_is_small() {
    let (l, eps) = (1.0, 1e-3);
    for seed in 0..20 {
        let d = weighted_tree(40, l, seed).distances();
        let d_pre = noisy_input(&d, l, eps, seed + 7);
        let out = chowliu::metric::tree_metric_reconstruction_detailed(&d_pre, l, eps, 44.0).unwrap();
        assert!(out.c_radius <= 30.0 * eps, "seed {seed}: {}", out.c_radius);
    }
}

#[test]
fn tree_reconstruction_examples() {
    for seed in 0..10 {
        let t = weighted_tree(25, 1.0, seed);
        let d = t.distances();
        let out = tree_metric_reconstruction(&d, 1.0, 0.0).unwrap();
        assert!(max_abs_diff(&out.distances(), &d) <= 1e-9, "seed {seed}");
    }

    let star = DistanceEstimate::from_fn(4, |u, v| if u == 0 || v == 0 { 1.0 } else { 2.0 }).unwrap();
    let noisy = noisy_input(&star, 1.0, 1e-4, 5);
    let out = tree_metric_reconstruction(&noisy, 1.0, 1e-4).unwrap();
    assert!(max_abs_diff(&out.distances(), &star) <= 1e-2);
}

#[test]
fn tree_reconstruction_error_is_linear_in_eps() {
    let eps = 1e-4;
    for seed in 0..20 {
        let l = [0.5, 1.0, 2.0][seed as usize % 3];
        let d = weighted_tree(50, l, seed).distances();
        let d_pre = noisy_input(&d, l, eps, seed + 1);
        let d_hat = tree_metric_reconstruction(&d_pre, l, eps).unwrap().distances();
        for u in 0..50 {
            for v in u + 1..50 {
                let x = d.get(u, v);
                assert!((d_hat.get(u, v) - x).abs() / (x / l + 1.0) <= 500.0 * eps);
            }
        }
    }
}

/// Random Steiner tree: labeled vertices are `0..k`, root 0.
fn random_steiner(nv: usize, k: usize, seed: u64) -> SteinerTree {
    let mut r = rng(seed);
    let topology = chowliu::experiments::random_topology(nv, &mut r);
    let edges = topology.edges().iter().map(|&(a, b)| (a, b, r.gen::<f64>())).collect();
    SteinerTree::new(k, nv, edges, 0).unwrap()
}

/// Depth of the lowest common ancestor of `u` and `v` in `t` rooted at 0.
fn lca_depth(t: &chowliu::metric::WeightedTree, u: usize, v: usize) -> f64 {
    let depth = t.distances();
    let path = t.topology.path_edges(u, v);
    let mut best = depth.get(0, u).min(depth.get(0, v));
    for e in path {
        let (a, b) = t.topology.edges()[e];
        best = best.min(depth.get(0, a)).min(depth.get(0, b));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dijkstra_matches_floyd_warshall(n in 1usize..=64, seed: u64, rho in 0usize..64, sparse: bool) {
        let rho = rho % n;
        let a = random_dissimilarity(n, seed, |r| {
            if sparse && r.gen::<f64>() < 0.7 { f64::INFINITY } else { r.gen::<f64>() * 10.0 }
        });
        let closure = all_pairs_shortest_paths(&a).unwrap();
        let row = shortest_paths_from_root(&a, rho);
        for v in 0..n {
            let (x, y) = (row[v], closure.get(rho, v));
            prop_assert!(x == y || (x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn subdominant_matches_minimax_and_is_maximal(n in 1usize..=32, seed: u64, coarse: bool) {
        let a = random_dissimilarity(n, seed, |r| if coarse { r.gen_range(1..5) as f64 } else { r.gen::<f64>() });
        let dendrogram = subdominant_ultrametric(&a).unwrap();
        let e = dendrogram.to_matrix();
        prop_assert_eq!(&e, &minimax_path_closure(&a).unwrap());
        prop_assert!(e.is_ultrametric(1e-9));
        for u in 0..n {
            for v in 0..n {
                prop_assert!(e.get(u, v) <= a.get(u, v));
            }
        }
        let eta = 1e-6;
        for node in n..dendrogram.n_nodes() {
            let raised = dendrogram.perturbed(node, eta).to_matrix();
            let dominated = (0..n).all(|u| (0..n).all(|v| raised.get(u, v) <= a.get(u, v) + 1e-9));
            prop_assert!(!dominated || !raised.is_ultrametric(1e-9), "raising node {} kept a valid ultrametric", node);
        }
    }

    #[test]
    fn ultra_minus_centroid_reproduces_tree_metric(n in 1usize..=16, seed: u64) {
        // The Farris transform of a tree metric is a valid (e, c) pair.
        let d = weighted_tree(n, 1.0, seed).distances();
        let centroid = CentroidMetric::from_root_distances(d.row(0), 0).unwrap();
        let e = DistanceEstimate::from_fn(n, |u, v| d.get(u, v) + centroid.c(u, v)).unwrap();
        prop_assert!(e.is_ultrametric(1e-9));
        let dendrogram = subdominant_ultrametric(&e).unwrap();
        let out = ultra_minus_centroid(&dendrogram, &centroid, 0).unwrap();
        prop_assert_eq!(out.leaf_clamps, 0);
        prop_assert!(max_abs_diff(&out.tree.labeled_distances(), &d) <= 1e-9);
    }

    #[test]
    fn lca_depth_identity(n in 2usize..40, seed: u64) {
        let t = weighted_tree(n, 1.0, seed);
        let d = t.distances();
        for u in 0..n {
            for v in 0..n {
                let expected = (d.get(u, 0) + d.get(v, 0) - d.get(u, v)) / 2.0;
                prop_assert!((lca_depth(&t, u, v) - expected).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn desteinerize_bounds(nv in 2usize..50, k_frac in 0.0f64..1.0, seed: u64) {
        let k = 1 + ((nv - 1) as f64 * k_frac) as usize;
        let t = random_steiner(nv, k, seed);
        let before = t.labeled_distances();
        let pruned = prune_steiner(&t);
        prop_assert!(max_abs_diff(&pruned.labeled_distances(), &before) <= 1e-12);
        for s in pruned.n_labeled()..pruned.n_vertices() {
            let degree = pruned.edges().iter().filter(|&&(a, b, _)| a == s || b == s).count();
            prop_assert!(degree >= 3);
        }
        let out = desteinerize(&t).unwrap();
        prop_assert_eq!(out.tree.n(), k);
        prop_assert!((out.c_radius - c_radius(&pruned)).abs() == 0.0);
        prop_assert!(max_abs_diff(&out.tree.distances(), &before) <= 12.0 * out.c_radius + 1e-12);
    }

    #[test]
    fn closure_sandwich(n in 2usize..40, seed: u64, l in 0.5f64..2.0) {
        let eps = 1e-3;
        let d = weighted_tree(n, l, seed).distances();
        let d_pre = noisy_input(&d, l, eps, seed ^ 1);
        let closed = all_pairs_shortest_paths(&d_pre).unwrap();
        for u in 0..n {
            for v in 0..n {
                let (x, y) = (d.get(u, v), closed.get(u, v));
                prop_assert!(x <= y + 1e-12);
                prop_assert!(y <= x + (x / l + 1.0) * eps + 1e-12);
            }
        }
    }
}
