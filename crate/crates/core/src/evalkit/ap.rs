//! Average precision by exact integration of the interpolated PR curve.

use serde::{Deserialize, Serialize};

use super::matching::{match_detections, MatchOutcome};
use super::metrics::mean_ap;
use super::{EvalError, EvalImage};
use crate::geom::{ClassId, Detection, GroundTruthBox, NUM_CLASSES};

/// IoU thresholds for mAP50-95.
pub const MAP_RANGE_THRESHOLDS: [f64; 10] =
    [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub confidence: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Precision/recall pairs obtained by lowering the confidence cutoff one
/// distinct confidence value at a time. Detections sharing a confidence
/// enter the curve together.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub num_gt: usize,
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// Builds the curve from `(confidence, is_true_positive)` pairs.
    pub fn from_scored(scored: &[(f64, bool)], num_gt: usize) -> Self {
        let mut sorted = scored.to_vec();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut points = Vec::new();
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut i = 0;
        while i < sorted.len() {
            let conf = sorted[i].0;
            while i < sorted.len() && sorted[i].0 == conf {
                if sorted[i].1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            points.push(PrPoint {
                confidence: conf,
                recall: if num_gt == 0 { 0.0 } else { tp as f64 / num_gt as f64 },
                precision: tp as f64 / (tp + fp) as f64,
            });
        }
        PrCurve { num_gt, points }
    }

    /// Area under the monotone (non-increasing) precision envelope, i.e.
    /// all-point interpolated AP.
    pub fn average_precision(&self) -> Result<f64, EvalError> {
        if self.num_gt == 0 {
            return Err(EvalError::NoGroundTruth);
        }
        let mut envelope: Vec<f64> = self.points.iter().map(|p| p.precision).collect();
        for k in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[k] = envelope[k].max(envelope[k + 1]);
        }
        let mut area = 0.0;
        let mut prev_recall = 0.0;
        for (p, env) in self.points.iter().zip(&envelope) {
            area += (p.recall - prev_recall) * env;
            prev_recall = p.recall;
        }
        Ok(area)
    }
}

fn scored(outcomes: &[MatchOutcome], class: Option<ClassId>) -> Vec<(f64, bool)> {
    outcomes
        .iter()
        .filter(|o| class.is_none_or(|c| o.class_id == c))
        .map(|o| (o.confidence, o.is_tp()))
        .collect()
}

/// AP for one image with every detection pooled into a single ranking.
/// Typically called with a single class.
pub fn average_precision(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    iou_thresh: f64,
) -> Result<f64, EvalError> {
    let (outcomes, _) = match_detections(dets, gts, iou_thresh);
    PrCurve::from_scored(&scored(&outcomes, None), gts.len()).average_precision()
}

/// AP of `class` over several images at one IoU threshold.
pub fn class_average_precision(
    images: &[EvalImage],
    class: ClassId,
    iou_thresh: f64,
) -> Result<f64, EvalError> {
    class_curve(images, class, iou_thresh).average_precision()
}

pub fn class_curve(images: &[EvalImage], class: ClassId, iou_thresh: f64) -> PrCurve {
    let mut all = Vec::new();
    let mut num_gt = 0;
    for img in images {
        let (outcomes, _) = match_detections(&img.detections, &img.ground_truths, iou_thresh);
        all.extend(scored(&outcomes, Some(class)));
        num_gt += img.ground_truths.iter().filter(|g| g.class_id == class).count();
    }
    PrCurve::from_scored(&all, num_gt)
}

/// Per-class AP at one threshold; `None` for classes without ground truth.
pub fn per_class_ap(images: &[EvalImage], iou_thresh: f64) -> [Option<f64>; NUM_CLASSES] {
    let mut scored_by_class: [Vec<(f64, bool)>; NUM_CLASSES] = Default::default();
    let mut num_gt = [0usize; NUM_CLASSES];
    for img in images {
        let (outcomes, _) = match_detections(&img.detections, &img.ground_truths, iou_thresh);
        for o in &outcomes {
            scored_by_class[o.class_id.index()].push((o.confidence, o.is_tp()));
        }
        for g in &img.ground_truths {
            num_gt[g.class_id.index()] += 1;
        }
    }
    std::array::from_fn(|c| {
        PrCurve::from_scored(&scored_by_class[c], num_gt[c])
            .average_precision()
            .ok()
    })
}

/// Mean over classes with ground truth of AP at `iou_thresh`.
pub fn dataset_map(images: &[EvalImage], iou_thresh: f64) -> Result<f64, EvalError> {
    let aps: Vec<f64> = per_class_ap(images, iou_thresh).into_iter().flatten().collect();
    if aps.is_empty() {
        return Err(EvalError::NoGroundTruth);
    }
    mean_ap(&aps)
}

/// mAP averaged over a set of IoU thresholds (mAP50-95 with
/// [`MAP_RANGE_THRESHOLDS`]).
pub fn dataset_map_range(images: &[EvalImage], thresholds: &[f64]) -> Result<f64, EvalError> {
    let maps = thresholds
        .iter()
        .map(|&t| dataset_map(images, t))
        .collect::<Result<Vec<_>, _>>()?;
    mean_ap(&maps)
}

/// Single-image convenience for [`dataset_map_range`].
pub fn map_range(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    thresholds: &[f64],
) -> Result<f64, EvalError> {
    let img = EvalImage {
        image_id: String::new(),
        detections: dets.to_vec(),
        ground_truths: gts.to_vec(),
    };
    dataset_map_range(std::slice::from_ref(&img), thresholds)
}
