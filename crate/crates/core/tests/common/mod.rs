//! Reference implementations and random generators shared by the integration
//! tests and the acceptance suite. Nothing here calls the library code it is
//! compared against.
#![allow(dead_code)]

use chrono::NaiveDate;
use rand::Rng;

use florimeter_core::annotio::{CountsRow, DetectionRecord, LabelRecord, ManifestRow, RawStageRow, Condition};
use florimeter_core::neurokernel::{FeatureMap, SEBlock};
use florimeter_core::geom::{BBox, ClassId, Detection, GroundTruthBox, NUM_CLASSES};
use florimeter_core::StageLabel;

pub const WELCH_ORACLE: &str = include_str!("../data/welch_oracle.json");

pub fn oracle_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    let union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Sort key: confidence descending, then x_min, y_min, class, input position.
fn ranked(dets: &[Detection]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (&dets[i], &dets[j]);
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(a.bbox.x_min.partial_cmp(&b.bbox.x_min).unwrap())
            .then(a.bbox.y_min.partial_cmp(&b.bbox.y_min).unwrap())
            .then(a.class_id.index().cmp(&b.class_id.index()))
            .then(i.cmp(&j))
    });
    idx
}

/// True positives among `dets` when matched from scratch.
fn oracle_true_positives(dets: &[Detection], gts: &[GroundTruthBox], iou_thresh: f64) -> usize {
    let mut used = vec![false; gts.len()];
    let mut tp = 0;
    for i in ranked(dets) {
        let d = &dets[i];
        let mut pick = None;
        let mut best = -1.0;
        for (j, g) in gts.iter().enumerate() {
            if used[j] || g.class_id != d.class_id {
                continue;
            }
            let v = oracle_iou(&d.bbox, &g.bbox);
            if v >= iou_thresh && v > best {
                best = v;
                pick = Some(j);
            }
        }
        if let Some(j) = pick {
            used[j] = true;
            tp += 1;
        }
    }
    tp
}

/// AP of one class by brute force: every distinct confidence is tried as a
/// cutoff and the retained detections are rematched from scratch. The
/// interpolated precision at recall `r` is the best precision among cutoffs
/// reaching at least `r`. `None` without ground truth of that class.
pub fn brute_force_ap(dets: &[Detection], gts: &[GroundTruthBox], class: ClassId, iou_thresh: f64) -> Option<f64> {
    let gts: Vec<GroundTruthBox> = gts.iter().copied().filter(|g| g.class_id == class).collect();
    if gts.is_empty() {
        return None;
    }
    let dets: Vec<Detection> = dets.iter().copied().filter(|d| d.class_id == class).collect();
    let mut cutoffs: Vec<f64> = dets.iter().map(|d| d.confidence).collect();
    cutoffs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    cutoffs.dedup();
    let points: Vec<(f64, f64)> = cutoffs
        .iter()
        .map(|&c| {
            let kept: Vec<Detection> = dets.iter().copied().filter(|d| d.confidence >= c).collect();
            let tp = oracle_true_positives(&kept, &gts, iou_thresh) as f64;
            (tp / gts.len() as f64, tp / kept.len() as f64)
        })
        .collect();
    let mut levels: Vec<f64> = points.iter().map(|p| p.0).filter(|&r| r > 0.0).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let mut ap = 0.0;
    let mut prev = 0.0;
    for r in levels {
        let p = points.iter().filter(|q| q.0 >= r).map(|q| q.1).fold(0.0, f64::max);
        ap += (r - prev) * p;
        prev = r;
    }
    Some(ap)
}

/// Greedy NMS written directly from its definition: walk in rank order and
/// keep a box unless a kept box (same class when `class_aware`) overlaps it
/// by more than `iou_thresh`.
pub fn oracle_nms(dets: &[Detection], iou_thresh: f64, class_aware: bool) -> Vec<Detection> {
    let mut kept: Vec<Detection> = Vec::new();
    for i in ranked(dets) {
        let d = dets[i];
        let clash = kept
            .iter()
            .any(|k| (!class_aware || k.class_id == d.class_id) && oracle_iou(&k.bbox, &d.bbox) > iou_thresh);
        if !clash {
            kept.push(d);
        }
    }
    kept
}

/// squeeze, excite and scale written out element by element.
pub fn se_oracle(block: &SEBlock, x: &FeatureMap) -> Vec<f64> {
    let hw = x.height * x.width;
    let z: Vec<f64> = (0..x.channels)
        .map(|c| x.data[c * hw..(c + 1) * hw].iter().sum::<f64>() / hw as f64)
        .collect();
    let hidden: Vec<f64> = (0..block.fc1.rows())
        .map(|r| (0..x.channels).map(|c| block.fc1.get(r, c) * z[c]).sum::<f64>().max(0.0))
        .collect();
    let s: Vec<f64> = (0..x.channels)
        .map(|c| {
            let a: f64 = hidden.iter().enumerate().map(|(k, h)| block.fc2.get(c, k) * h).sum();
            1.0 / (1.0 + (-a).exp())
        })
        .collect();
    x.data.iter().enumerate().map(|(i, v)| v * s[i / hw]).collect()
}

/// Textbook two-pass coefficient of determination.
pub fn two_pass_r2(pairs: &[(f64, f64)]) -> f64 {
    let mean = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let ss_tot: f64 = pairs.iter().map(|p| (p.0 - mean).powi(2)).sum();
    let ss_res: f64 = pairs.iter().map(|p| (p.0 - p.1).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

pub fn class<R: Rng>(rng: &mut R) -> ClassId {
    ClassId::new(rng.random_range(0..NUM_CLASSES as u32)).unwrap()
}

pub fn random_box<R: Rng>(rng: &mut R) -> BBox {
    let w = rng.random_range(0.02..0.4);
    let h = rng.random_range(0.02..0.4);
    let x = rng.random_range(0.0..1.0 - w);
    let y = rng.random_range(0.0..1.0 - h);
    BBox::new(x, y, x + w, y + h).unwrap()
}

/// `b` moved by up to `amount` of its size on each edge, kept non-empty.
pub fn jitter<R: Rng>(rng: &mut R, b: &BBox, amount: f64) -> BBox {
    let (w, h) = (b.x_max - b.x_min, b.y_max - b.y_min);
    let mut d = || rng.random_range(-amount..=amount);
    let x0 = b.x_min + d() * w;
    let y0 = b.y_min + d() * h;
    let x1 = (b.x_max + d() * w).max(x0 + 1e-3);
    let y1 = (b.y_max + d() * h).max(y0 + 1e-3);
    BBox::new(x0, y0, x1, y1).unwrap()
}

/// Confidence drawn from a coarse grid a third of the time so ties occur.
pub fn confidence<R: Rng>(rng: &mut R) -> f64 {
    if rng.random_bool(1.0 / 3.0) {
        rng.random_range(1..10) as f64 / 10.0
    } else {
        rng.random_range(0.0..=1.0)
    }
}

/// One image with up to `max_gts` ground truths and up to `max_dets`
/// detections, most of them jittered copies of a ground truth.
pub fn random_image<R: Rng>(rng: &mut R, max_dets: usize, max_gts: usize) -> (Vec<Detection>, Vec<GroundTruthBox>) {
    let gts: Vec<GroundTruthBox> = (0..rng.random_range(0..=max_gts))
        .map(|_| GroundTruthBox {
            bbox: random_box(rng),
            class_id: class(rng),
        })
        .collect();
    let dets = (0..rng.random_range(0..=max_dets))
        .map(|_| {
            let (bbox, class_id) = if !gts.is_empty() && rng.random_bool(0.7) {
                let g = gts[rng.random_range(0..gts.len())];
                let c = if rng.random_bool(0.85) { g.class_id } else { class(rng) };
                (jitter(rng, &g.bbox, 0.3), c)
            } else {
                (random_box(rng), class(rng))
            };
            Detection::new(bbox, class_id, confidence(rng)).unwrap()
        })
        .collect();
    (dets, gts)
}

/// Detections crowded around a few centers so NMS has work to do.
pub fn random_detections<R: Rng>(rng: &mut R, max: usize) -> Vec<Detection> {
    let seeds: Vec<BBox> = (0..rng.random_range(1..=6)).map(|_| random_box(rng)).collect();
    (0..rng.random_range(0..=max))
        .map(|_| {
            let seed = seeds[rng.random_range(0..seeds.len())];
            let b = jitter(rng, &seed, 0.25);
            Detection::new(b, class(rng), confidence(rng)).unwrap()
        })
        .collect()
}

pub fn random_id<R: Rng>(rng: &mut R) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
    (0..rng.random_range(1..=12))
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

pub fn random_date<R: Rng>(rng: &mut R) -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Days::new(rng.random_range(0..20_000))
}

/// A unit-interval value, sometimes one of the endpoints.
fn unit<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.0..=1.0),
    }
}

pub fn random_label_records<R: Rng>(rng: &mut R, max: usize) -> Vec<LabelRecord> {
    (0..rng.random_range(0..=max))
        .map(|_| LabelRecord {
            class_id: class(rng),
            cx: unit(rng),
            cy: unit(rng),
            w: unit(rng),
            h: unit(rng),
        })
        .collect()
}

pub fn random_detection_records<R: Rng>(rng: &mut R, max: usize) -> Vec<DetectionRecord> {
    random_label_records(rng, max)
        .into_iter()
        .map(|label| DetectionRecord {
            label,
            confidence: unit(rng),
        })
        .collect()
}

/// Rows with distinct image ids.
pub fn random_counts<R: Rng>(rng: &mut R, max: usize) -> Vec<CountsRow> {
    let mut rows: Vec<CountsRow> = Vec::new();
    for k in 0..rng.random_range(0..=max) {
        let id = format!("{}_{k}", random_id(rng));
        let [a, b, c] = std::array::from_fn(|_| {
            if rng.random_bool(0.1) {
                rng.random::<u32>() as u64
            } else {
                rng.random_range(0..200)
            }
        });
        rows.push(CountsRow::new(id, a, b, c));
    }
    rows
}

pub fn random_stage_rows<R: Rng>(rng: &mut R, max: usize) -> Vec<RawStageRow> {
    (0..rng.random_range(0..=max))
        .map(|_| {
            let accession = random_id(rng);
            let date = random_date(rng);
            let [bud, b_flower, w_flower] = std::array::from_fn(|_| match rng.random_range(0..4) {
                0 => rng.random_range(0..100) as f64,
                1 => 0.0,
                _ => rng.random_range(0.0..1e4),
            });
            RawStageRow {
                accession,
                date,
                bud,
                b_flower,
                w_flower,
                stage: rng
                    .random_bool(0.8)
                    .then(|| StageLabel::ALL[rng.random_range(0..StageLabel::ALL.len())]),
            }
        })
        .collect()
}

pub fn random_manifest<R: Rng>(rng: &mut R, max: usize) -> Vec<ManifestRow> {
    const CONDITIONS: [Condition; 5] = [
        Condition::Backlight,
        Condition::Frontlight,
        Condition::Pruned,
        Condition::Unpruned,
        Condition::None,
    ];
    (0..rng.random_range(0..=max))
        .map(|k| ManifestRow {
            image_id: format!("{}_{k}", random_id(rng)),
            accession: random_id(rng),
            date: random_date(rng),
            condition: CONDITIONS[rng.random_range(0..CONDITIONS.len())],
        })
        .collect()
}

/// Widths `[in, h.., out]` with 1 to 3 hidden layers.
pub fn random_widths<R: Rng>(rng: &mut R) -> Vec<usize> {
    (0..rng.random_range(3..=5)).map(|_| rng.random_range(1..=9)).collect()
}
