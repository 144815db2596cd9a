//! Flowering-stage classification from averaged counts and season time.

mod dataset;
mod metrics;
mod model;
mod synth;
mod train;

pub use crate::stage::StageLabel;
pub use dataset::{
    build_stage_dataset, encode_time, filter_low_quality, season_start_for, triplet_average, val_count,
    AveragedRow, DatasetConfig, Scaler, StageDataset, StageSample, FEATURE_NAMES, NUM_FEATURES,
    SEASON_LEAD_DAYS, SEASON_SPAN_DAYS,
};
pub use metrics::{accuracy, confusion, ClassConfusion};
pub use model::{argmax_stage, load_classifier, predict_stage, save_classifier, StageClassifier, MODEL_FORMAT, MODEL_VERSION};
pub use synth::{synthetic_stage_rows, ClusterMode, SynthConfig};
pub use train::{train_tfsc, EpochLog, TrainParams, TrainReport, DEFAULT_HIDDEN};

use chrono::NaiveDate;
use thiserror::Error;

use crate::neurokernel::NnError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TfscError {
    #[error("{accession} on {date}: stage labels disagree ({first:?} vs {other:?})")]
    InconsistentLabels {
        accession: String,
        date: NaiveDate,
        first: Option<StageLabel>,
        other: Option<StageLabel>,
    },
    #[error("date {date} is {days} days from season start {season_start}, outside [-30, 365]")]
    TimeRange {
        date: NaiveDate,
        season_start: NaiveDate,
        days: i64,
    },
    #[error("training split is empty")]
    EmptyTrain,
    #[error("scaler has not been fitted")]
    ScalerNotFitted,
    #[error("expected {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error("features must be finite")]
    NonFiniteFeature,
    #[error("non-finite training loss at epoch {epoch}, batch {batch}: {loss}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("{preds} predictions but {labels} labels")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("no samples to score")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}
