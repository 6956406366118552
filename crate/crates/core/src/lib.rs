//! Decision-tree induction with cross-validation folded into the build.
//!
//! [`grow_forest`] builds the actual tree and all `n` fold trees together
//! in one shared [`Forest`]; [`run_serial_cross_validation`] is the
//! one-tree-at-a-time baseline. [`extract_fold_tree`] recovers any fold's
//! tree from the forest and [`cross_validation_estimate`] scores them.

pub mod bench;
pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod forest;
pub mod induction;
pub mod instrument;
pub mod splits;
pub mod synthetic;
pub mod tree;
pub mod verify;

pub use bench::{measure_timings, speedup_bound, CostModel, Mode, TimingReport};
pub use data::{assign_folds, load_dataset, training_view, Dataset, FoldAssignment, LoadOptions};
pub use error::{Error, Result};
pub use evaluation::{cross_validation_estimate, estimate_from_trees, predict, EvaluationReport};
pub use forest::{extract_fold_tree, forest_metrics, Forest, ForestMetrics};
pub use induction::{
    grow_forest, grow_forest_depth_first, grow_forest_level_wise, grow_tree_serial,
    run_serial_cross_validation, InductionConfig, SerialRun, Variant,
};
pub use splits::Measure;
pub use synthetic::{generate_synthetic, Regime};
pub use tree::{Leaf, Tree};
