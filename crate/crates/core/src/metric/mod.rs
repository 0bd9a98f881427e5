//! Tree metric reconstruction from noisy evolutionary distances.
//!
//! The pipeline turns a noisy distance matrix into an ultrametric with a
//! centroid correction, realizes the difference as a tree with latent
//! vertices, and then removes the latent vertices.

pub mod distance;
pub mod reconstruct;
pub mod steiner;
pub mod ultrametric;

pub use distance::{evolutionary_estimate, shortest_paths_from_root, DistanceEstimate};
pub use reconstruct::{
    additive_metric_reconstruction, additive_metric_reconstruction_with_slack, tree_metric_reconstruction,
    tree_metric_reconstruction_detailed, AmrDiagnostics, AmrOutput, TmrOutput, DEFAULT_SLACK_COEFF,
};
pub use steiner::{
    c_radius, desteinerize, prune_steiner, ultra_minus_centroid, CentroidMetric, Desteinerized, SteinerTree,
    UltraMinusCentroid, WeightedTree,
};
pub use ultrametric::{min_spanning_tree, subdominant_ultrametric, Dendrogram};
