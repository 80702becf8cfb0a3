//! Reliability-aware graph fusion network predicting per-step success.

mod graph;
mod layers;
mod model;
mod train;

pub use graph::{build_graph, normalized_adjacency, reliability_factor, EdgeGating, FeatureGraph};
pub use layers::{GraphAttention, GraphAttentionCache, GraphConv, GraphConvCache};
pub use model::{
    bce, bce_grad, loss, ForwardCache, FusionConfig, FusionModel, GnnConfig, GnnParams,
    SampleInput, BCE_EPS,
};
pub use train::{
    batch_gradient, evaluate, train, Checkpoint, EpochLog, Evaluation, OptimizerKind,
    TrainConfig, TrainOutcome, TrainSample, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
