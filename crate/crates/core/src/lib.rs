//! Semi-supervised node classification from local label distributions.
//!
//! The pipeline computes an approximate personalized PageRank row for every
//! node by local push ([`appr`]), multiplies the diagonal-free APPR matrix
//! with the training label matrix to obtain per-node label distributions
//! ([`labelfeat`]), and trains a small feed-forward classifier on them
//! ([`nn`]). [`datasets`] loads benchmark graphs and draws splits;
//! [`eval`] scores predictions and runs parameter sweeps.

pub mod appr;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod graph;
pub mod labelfeat;
pub mod nn;
pub mod sparse;

pub use appr::{appr_all, approximate_ppr, exact_ppr, ApprConfig, ApprMatrix, ApprVector};
pub use datasets::{Dataset, SplitSpec};
pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use labelfeat::{FeatureMatrix, Features, LabelMatrix, Task};
pub use nn::{EmbAugmentedModel, Head, MlpModel, TrainConfig};
