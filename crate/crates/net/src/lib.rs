//! Link prediction with spectral blocks on constrained Lanczos eigenbases.
//!
//! Each block computes `σ(V diag(f(R)) Vᵀ X W)` with a learned pointwise
//! filter `f`, reusing one eigenbasis `(V, R)` per link instance. Block
//! outputs are sort pooled and mapped to a link probability.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use data::{
    build_dataset, degree_product_scores, node_features, split_links, ConstraintPolicy, LinkDataset, LinkInstance,
    LinkSplit,
};
pub use error::{NetError, Result};
pub use gradcheck::{finite_difference_check, GroupCheck};
pub use model::{bce_loss, block_forward, sort_pooling, Activation, FilterMlp, ModelConfig, SpectralModel};
pub use train::{
    auc, evaluate, gradients, hits_at_k, metrics_csv, train, EpochMetrics, Metric, OptimizerKind, TrainConfig,
};
