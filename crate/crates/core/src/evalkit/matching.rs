use serde::{Deserialize, Serialize};

use crate::geom::{iou, rank_order, ClassId, Detection, GroundTruthBox, NUM_CLASSES};

/// Result of matching one detection against the ground truth of its image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOutcome {
    /// Index into the detection list passed to [`match_detections`].
    pub det_index: usize,
    pub class_id: ClassId,
    pub confidence: f64,
    /// Matched ground-truth index, `None` for a false positive.
    pub gt_index: Option<usize>,
    pub iou: f64,
}

impl MatchOutcome {
    pub fn is_tp(&self) -> bool {
        self.gt_index.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ClassTally {
    pub fn merge(&self, other: &ClassTally) -> ClassTally {
        ClassTally {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

/// Per-class TP/FP/FN at one IoU threshold. True negatives do not exist in
/// detection and are not tracked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchTally {
    pub classes: [ClassTally; NUM_CLASSES],
}

impl MatchTally {
    pub fn class(&self, c: ClassId) -> &ClassTally {
        &self.classes[c.index()]
    }

    /// Associative, commutative merge used to aggregate images.
    pub fn merge(&self, other: &MatchTally) -> MatchTally {
        MatchTally {
            classes: std::array::from_fn(|i| self.classes[i].merge(&other.classes[i])),
        }
    }

    pub fn total(&self) -> ClassTally {
        self.classes
            .iter()
            .fold(ClassTally::default(), |acc, c| acc.merge(c))
    }

    /// Tallies outcomes whose confidence is at least `conf_floor`.
    ///
    /// Greedy matching visits detections in confidence order, so restricting
    /// to a confidence prefix afterwards yields the same matches as matching
    /// only the retained detections.
    pub fn from_outcomes(outcomes: &[MatchOutcome], gts: &[GroundTruthBox], conf_floor: f64) -> Self {
        let mut t = MatchTally::default();
        for g in gts {
            t.classes[g.class_id.index()].fn_ += 1;
        }
        for o in outcomes.iter().filter(|o| o.confidence >= conf_floor) {
            let c = &mut t.classes[o.class_id.index()];
            if o.is_tp() {
                c.tp += 1;
                c.fn_ -= 1;
            } else {
                c.fp += 1;
            }
        }
        t
    }
}

/// Greedy confidence-ordered matching for a single image.
///
/// Detections are visited in [`rank_order`]. Each one claims the unmatched
/// same-class ground truth with the highest IoU, provided that IoU is at
/// least `iou_thresh`; IoU ties go to the lower ground-truth index. Outcomes
/// are returned in visiting order.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    iou_thresh: f64,
) -> (Vec<MatchOutcome>, MatchTally) {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| rank_order(&dets[a], &dets[b]).then(a.cmp(&b)));

    let mut taken = vec![false; gts.len()];
    let mut outcomes = Vec::with_capacity(dets.len());
    for i in order {
        let d = &dets[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts.iter().enumerate() {
            if taken[j] || g.class_id != d.class_id {
                continue;
            }
            let v = iou(&d.bbox, &g.bbox);
            if v >= iou_thresh && best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
        }
        outcomes.push(MatchOutcome {
            det_index: i,
            class_id: d.class_id,
            confidence: d.confidence,
            gt_index: best.map(|(j, _)| j),
            iou: best.map_or(0.0, |(_, v)| v),
        });
    }
    let tally = MatchTally::from_outcomes(&outcomes, gts, f64::NEG_INFINITY);
    (outcomes, tally)
}
