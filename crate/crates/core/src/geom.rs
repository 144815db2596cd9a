//! Bounding-box geometry: corner-form boxes, IoU, confidence composition and
//! greedy non-maximum suppression.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Class names in registry order. Index is the YOLO class id.
pub const CLASS_NAMES: [&str; 3] = ["bud", "b_flower", "w_flower"];

/// Number of registered detection classes.
pub const NUM_CLASSES: usize = CLASS_NAMES.len();

/// Default IoU threshold for non-maximum suppression.
pub const DEFAULT_NMS_IOU: f64 = 0.45;

/// Default confidence floor applied to detector output.
pub const DEFAULT_CONF_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("invalid box ({x_min}, {y_min}, {x_max}, {y_max}): corners out of order or not finite")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("unknown class id {0} (registry has {NUM_CLASSES} classes)")]
    UnknownClass(u32),
    #[error("{name} = {value} is outside [0, 1]")]
    Domain { name: &'static str, value: f64 },
}

/// Axis-aligned box in corner form.
///
/// Coordinates are usually normalized to `[0, 1]`, but pixel coordinates work
/// just as well since IoU is scale invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeomError> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min > x_max || y_min > y_max {
            return Err(GeomError::InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Builds a box from center form `(cx, cy, w, h)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeomError> {
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    /// Returns `(cx, cy, w, h)`.
    pub fn to_center(&self) -> (f64, f64, f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
            self.width(),
            self.height(),
        )
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    /// Area of the overlap with `other`, zero when disjoint.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Clamps every coordinate into `[lo, hi]`.
    pub fn clamp(&self, lo: f64, hi: f64) -> BBox {
        BBox {
            x_min: self.x_min.clamp(lo, hi),
            y_min: self.y_min.clamp(lo, hi),
            x_max: self.x_max.clamp(lo, hi),
            y_max: self.y_max.clamp(lo, hi),
        }
    }

    /// Applies `s * coord + t` to both axes.
    pub fn affine(&self, scale: f64, tx: f64, ty: f64) -> BBox {
        BBox {
            x_min: scale * self.x_min + tx,
            y_min: scale * self.y_min + ty,
            x_max: scale * self.x_max + tx,
            y_max: scale * self.y_max + ty,
        }
    }
}

/// Intersection over union. Returns 0 when the union has zero area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Composed detection confidence `Pr(object) * IoU * Pr(class | object)`.
pub fn confidence_score(p_obj: f64, iou_val: f64, p_class: f64) -> Result<f64, GeomError> {
    for (name, value) in [("p_obj", p_obj), ("iou", iou_val), ("p_class", p_class)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(GeomError::Domain { name, value });
        }
    }
    Ok(p_obj * iou_val * p_class)
}

/// Index into [`CLASS_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ClassId(u8);

impl ClassId {
    pub const BUD: ClassId = ClassId(0);
    pub const B_FLOWER: ClassId = ClassId(1);
    pub const W_FLOWER: ClassId = ClassId(2);

    pub fn new(id: u32) -> Result<Self, GeomError> {
        if (id as usize) < NUM_CLASSES {
            Ok(ClassId(id as u8))
        } else {
            Err(GeomError::UnknownClass(id))
        }
    }

    pub fn all() -> impl Iterator<Item = ClassId> {
        (0..NUM_CLASSES as u8).map(ClassId)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        CLASS_NAMES[self.index()]
    }
}

impl TryFrom<u32> for ClassId {
    type Error = GeomError;

    fn try_from(id: u32) -> Result<Self, Self::Error> {
        ClassId::new(id)
    }
}

impl From<ClassId> for u32 {
    fn from(c: ClassId) -> u32 {
        c.0 as u32
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub class_id: ClassId,
    pub confidence: f64,
}

impl Detection {
    pub fn new(bbox: BBox, class_id: ClassId, confidence: f64) -> Result<Self, GeomError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(GeomError::Domain {
                name: "confidence",
                value: confidence,
            });
        }
        Ok(Self {
            bbox,
            class_id,
            confidence,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub bbox: BBox,
    pub class_id: ClassId,
}

/// Ranking used everywhere detections are ordered: confidence descending,
/// then lower `x_min`, lower `y_min`, lower class id.
pub fn rank_order(a: &Detection, b: &Detection) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.bbox.x_min.total_cmp(&b.bbox.x_min))
        .then(a.bbox.y_min.total_cmp(&b.bbox.y_min))
        .then(a.class_id.cmp(&b.class_id))
}

/// Greedy non-maximum suppression.
///
/// Keeps the highest-ranked remaining detection and drops every remaining
/// detection whose IoU with it exceeds `iou_thresh` (same class only when
/// `class_aware`). Output is in rank order. `iou_thresh` is expected in `(0, 1]`.
pub fn nms(dets: &[Detection], iou_thresh: f64, class_aware: bool) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| rank_order(&dets[i], &dets[j]));

    let mut suppressed = vec![false; dets.len()];
    let mut keep = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        let kept = dets[i];
        keep.push(kept);
        for &j in &order[pos + 1..] {
            if suppressed[j] || (class_aware && dets[j].class_id != kept.class_id) {
                continue;
            }
            if iou(&kept.bbox, &dets[j].bbox) > iou_thresh {
                suppressed[j] = true;
            }
        }
    }
    keep
}
