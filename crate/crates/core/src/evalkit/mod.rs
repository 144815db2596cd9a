//! Detection-quality metrics: greedy matching, precision/recall/F1, PR curves,
//! AP, mAP50, mAP50-95 and R².

mod ap;
mod matching;
mod metrics;
mod report;

pub use ap::{
    average_precision, class_average_precision, class_curve, dataset_map, dataset_map_range,
    map_range, per_class_ap, PrCurve, PrPoint, MAP_RANGE_THRESHOLDS,
};
pub use matching::{match_detections, ClassTally, MatchOutcome, MatchTally};
pub use metrics::{f1, mean_ap, precision, r_squared, recall, RegressionPairs};
pub use report::{
    evaluate_dataset, evaluate_grouped, AllClassReport, ClassReport, EvalConfig, EvalReport,
    GroupedReport,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Detection, GroundTruthBox};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("average precision is undefined without ground-truth boxes")]
    NoGroundTruth,
    #[error("cannot average an empty list of AP values")]
    EmptyApList,
    #[error("R² needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("R² is undefined when every observation is identical")]
    ConstantObservations,
    #[error("IoU threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("confidence floor {0} is outside [0, 1]")]
    InvalidConfFloor(f64),
    #[error(
        "image ids differ: missing detections for [{}], missing labels for [{}]",
        missing_detections.join(", "),
        missing_labels.join(", ")
    )]
    ImageIdMismatch {
        missing_detections: Vec<String>,
        missing_labels: Vec<String>,
    },
}

/// Detections and annotations for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalImage {
    pub image_id: String,
    pub detections: Vec<Detection>,
    pub ground_truths: Vec<GroundTruthBox>,
}

/// Joins labels and detections by image id. Both maps must have the same keys.
pub fn pair_images(
    mut labels: BTreeMap<String, Vec<GroundTruthBox>>,
    mut detections: BTreeMap<String, Vec<Detection>>,
) -> Result<Vec<EvalImage>, EvalError> {
    let missing_detections: Vec<String> = labels
        .keys()
        .filter(|k| !detections.contains_key(*k))
        .cloned()
        .collect();
    let missing_labels: Vec<String> = detections
        .keys()
        .filter(|k| !labels.contains_key(*k))
        .cloned()
        .collect();
    if !missing_detections.is_empty() || !missing_labels.is_empty() {
        return Err(EvalError::ImageIdMismatch {
            missing_detections,
            missing_labels,
        });
    }
    let ids: Vec<String> = labels.keys().cloned().collect();
    Ok(ids
        .into_iter()
        .map(|id| EvalImage {
            ground_truths: labels.remove(&id).unwrap_or_default(),
            detections: detections.remove(&id).unwrap_or_default(),
            image_id: id,
        })
        .collect())
}
