//! Temporal splits, log-rank targets, masked training, the fraction sweep and error analysis.

pub mod analysis;
mod data;
pub mod hyper;
mod metrics;
mod split;
pub mod sweep;
pub mod synthetic;
mod train;

use chrono::NaiveDate;
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::graph::GraphError;
use crate::models::{ModelError, ModelKind};
use crate::numerics::NumericsError;

pub use analysis::{anchor_neighborhood, error_analysis, AnchorNeighborhood, CaseRow, ErrorAnalysis};
pub use data::{build_targets, feature_tensor, Dataset, NodeMask, ProviderSpec, TargetVector};
pub use hyper::{HyperGrid, HyperParams, MlpProfile};
pub use metrics::{compute_metrics, evaluate, Metrics, MetricsReport};
pub use split::{
    eligible_groups, log_rank_targets, temporal_split, LogBase, RankDirection, Split, SplitSpec,
    TargetOptions, TimeWindow,
};
pub use sweep::{fraction_sweep, CellResult, SweepConfig};
pub use train::{run_training, EarlyStopping, EpochRecord, LossKind, StopDecision, TrainConfig, TrainedModel};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid split spec: {0}")]
    InvalidSpec(String),
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("bug {bug_id} has no heat snapshot on or before {crawl}")]
    MissingHeat { bug_id: u64, crawl: NaiveDate },
    #[error("bug {0} is not a graph node")]
    UnknownNode(u64),
    #[error("mask mismatch: {0}")]
    MaskMismatch(String),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("no default hyperparameters for {model} at fraction {fraction}")]
    NoDefaults { model: ModelKind, fraction: f64 },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
