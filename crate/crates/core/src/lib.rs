//! Learning tree-structured Ising models that are accurate in local total
//! variation, even when the data is not exactly tree-structured.
//!
//! The main entry point is [`learn_model`] (Chow-Liu++). It builds a Chow-Liu
//! tree, cuts it at weak edges, reconstructs each strongly correlated block
//! from evolutionary distances, and stitches the blocks back together.
//!
//! ```
//! use chowliu::{learn_model, TreeIsingModel};
//!
//! let truth = TreeIsingModel::from_edges(4, &[(0, 1, 0.8), (1, 2, -0.6), (1, 3, 0.05)]).unwrap();
//! let mu = truth.pairwise_correlations();
//! let learned = learn_model(&mu, 1e-6).unwrap();
//! assert!(learned.pairwise_correlations().max_abs_diff(&mu).unwrap() < 1e-3);
//! ```

pub mod chow_liu;
pub mod error;
pub mod experiments;
pub mod io;
pub mod learner;
pub mod metric;
pub mod model;
pub mod oracles;
mod util;

pub use chow_liu::{
    chow_liu_model, learn_ferro_model, learn_ferro_model_with_partition, max_spanning_tree, weak_edge_partition,
    VertexPartition, WEAK_EDGE_THRESHOLD,
};
pub use error::{Error, Result};
pub use learner::{
    learn_from_samples, learn_from_samples_with, learn_lwr_bdd_model, learn_lwr_bdd_model_with, learn_model,
    learn_model_with, sign_of_path_product, LearnerConfig, SampleReport,
};
pub use model::{
    loctv2, loctv_k_exact, perturb, CorrelationMatrix, JointTable, PerturbMode, SampleMatrix, TreeIsingModel,
    TreeTopology, MAX_EXACT_N,
};
pub use util::DisjointSet;
