use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ap::{PrCurve, MAP_RANGE_THRESHOLDS};
use super::matching::{match_detections, MatchOutcome, MatchTally};
use super::metrics::{f1, mean_ap, precision, recall};
use super::{EvalError, EvalImage};
use crate::geom::{ClassId, DEFAULT_CONF_THRESHOLD, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Detections below this confidence are ignored for P/R/F1. AP always
    /// uses every detection.
    pub conf_floor: f64,
    /// IoU threshold used for the P/R/F1 tallies.
    pub pr_iou: f64,
    /// Extra thresholds at which AP / mAP are reported individually.
    pub ap_thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            conf_floor: DEFAULT_CONF_THRESHOLD,
            pr_iou: 0.5,
            ap_thresholds: vec![0.5],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(0.0..=1.0).contains(&self.conf_floor) {
            return Err(EvalError::InvalidConfFloor(self.conf_floor));
        }
        for &t in std::iter::once(&self.pr_iou).chain(&self.ap_thresholds) {
            if !(t > 0.0 && t <= 1.0) {
                return Err(EvalError::InvalidThreshold(t));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    /// Ground-truth boxes of this class.
    pub instances: u64,
    /// Detections at or above the confidence floor.
    pub detections: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ap50: Option<f64>,
    pub ap50_95: Option<f64>,
    /// AP keyed by threshold (`"0.50"`, `"0.75"`, ...).
    pub ap: BTreeMap<String, f64>,
    /// Classes without ground truth have undefined AP and are left out of
    /// every class mean.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllClassReport {
    pub instances: u64,
    pub detections: u64,
    /// Mean of per-class precision over included classes.
    pub precision: f64,
    /// Mean of per-class recall over included classes.
    pub recall: f64,
    /// `f1(precision, recall)` of the two means above.
    pub f1: f64,
    pub map50: f64,
    pub map50_95: f64,
    pub map: BTreeMap<String, f64>,
    pub classes_in_mean: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub images: usize,
    pub conf_floor: f64,
    pub pr_iou: f64,
    pub ap_thresholds: Vec<f64>,
    pub classes: Vec<ClassReport>,
    pub all: AllClassReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedReport {
    pub overall: EvalReport,
    pub per_dataset: BTreeMap<String, EvalReport>,
    /// Groups that could not be evaluated, with the reason.
    pub skipped: BTreeMap<String, String>,
}

pub(crate) fn threshold_key(t: f64) -> String {
    format!("{t:.2}")
}

fn match_all(images: &[EvalImage], iou_thresh: f64) -> Vec<Vec<MatchOutcome>> {
    images
        .par_iter()
        .map(|img| match_detections(&img.detections, &img.ground_truths, iou_thresh).0)
        .collect()
}

fn class_aps(images: &[EvalImage], matched: &[Vec<MatchOutcome>], num_gt: &[usize; NUM_CLASSES]) -> [Option<f64>; NUM_CLASSES] {
    let mut scored: [Vec<(f64, bool)>; NUM_CLASSES] = Default::default();
    for outcomes in matched {
        for o in outcomes {
            scored[o.class_id.index()].push((o.confidence, o.is_tp()));
        }
    }
    debug_assert_eq!(images.len(), matched.len());
    std::array::from_fn(|c| PrCurve::from_scored(&scored[c], num_gt[c]).average_precision().ok())
}

/// Evaluates a set of images and produces per-class and all-class metrics.
pub fn evaluate_dataset(images: &[EvalImage], cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    cfg.validate()?;
    let mut num_gt = [0usize; NUM_CLASSES];
    for g in images.iter().flat_map(|i| &i.ground_truths) {
        num_gt[g.class_id.index()] += 1;
    }
    if num_gt.iter().all(|&n| n == 0) {
        return Err(EvalError::NoGroundTruth);
    }

    let pr_matches = match_all(images, cfg.pr_iou);
    let tally = images
        .iter()
        .zip(&pr_matches)
        .map(|(img, m)| MatchTally::from_outcomes(m, &img.ground_truths, cfg.conf_floor))
        .fold(MatchTally::default(), |a, b| a.merge(&b));

    let mut thresholds: Vec<f64> = MAP_RANGE_THRESHOLDS.to_vec();
    thresholds.extend(cfg.ap_thresholds.iter().copied());
    let mut ap_by_key: BTreeMap<String, [Option<f64>; NUM_CLASSES]> = BTreeMap::new();
    for t in thresholds {
        let key = threshold_key(t);
        if ap_by_key.contains_key(&key) {
            continue;
        }
        let matched = match_all(images, t);
        ap_by_key.insert(key, class_aps(images, &matched, &num_gt));
    }

    let mut classes = Vec::with_capacity(NUM_CLASSES);
    for c in ClassId::all() {
        let t = tally.class(c);
        let (p, r) = (precision(t), recall(t));
        let excluded = num_gt[c.index()] == 0;
        let range: Vec<f64> = MAP_RANGE_THRESHOLDS
            .iter()
            .filter_map(|&th| ap_by_key[&threshold_key(th)][c.index()])
            .collect();
        let ap = cfg
            .ap_thresholds
            .iter()
            .filter_map(|&th| {
                let key = threshold_key(th);
                ap_by_key[&key][c.index()].map(|v| (key, v))
            })
            .collect();
        classes.push(ClassReport {
            class: c.name().to_string(),
            instances: num_gt[c.index()] as u64,
            detections: t.tp + t.fp,
            tp: t.tp,
            fp: t.fp,
            fn_: t.fn_,
            precision: p,
            recall: r,
            f1: f1(p, r),
            ap50: ap_by_key[&threshold_key(0.5)][c.index()],
            ap50_95: (!excluded).then(|| mean_ap(&range)).transpose()?,
            ap,
            excluded,
        });
    }

    let included: Vec<&ClassReport> = classes.iter().filter(|c| !c.excluded).collect();
    let mean_of = |f: &dyn Fn(&ClassReport) -> f64| -> Result<f64, EvalError> {
        mean_ap(&included.iter().map(|c| f(c)).collect::<Vec<_>>())
    };
    let p = mean_of(&|c| c.precision)?;
    let r = mean_of(&|c| c.recall)?;
    let mut map = BTreeMap::new();
    for th in &cfg.ap_thresholds {
        let key = threshold_key(*th);
        map.insert(key.clone(), mean_of(&|c| c.ap[&key])?);
    }
    let all = AllClassReport {
        instances: classes.iter().map(|c| c.instances).sum(),
        detections: classes.iter().map(|c| c.detections).sum(),
        precision: p,
        recall: r,
        f1: f1(p, r),
        map50: mean_of(&|c| c.ap50.unwrap_or_default())?,
        map50_95: mean_of(&|c| c.ap50_95.unwrap_or_default())?,
        map,
        classes_in_mean: included.len(),
    };

    Ok(EvalReport {
        images: images.len(),
        conf_floor: cfg.conf_floor,
        pr_iou: cfg.pr_iou,
        ap_thresholds: cfg.ap_thresholds.clone(),
        classes,
        all,
    })
}

/// Evaluates the union of all groups plus each group on its own.
pub fn evaluate_grouped(
    groups: &BTreeMap<String, Vec<EvalImage>>,
    cfg: &EvalConfig,
) -> Result<GroupedReport, EvalError> {
    let all: Vec<EvalImage> = groups.values().flatten().cloned().collect();
    let overall = evaluate_dataset(&all, cfg)?;
    let mut per_dataset = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    for (name, imgs) in groups {
        match evaluate_dataset(imgs, cfg) {
            Ok(r) => {
                per_dataset.insert(name.clone(), r);
            }
            Err(e) => {
                skipped.insert(name.clone(), e.to_string());
            }
        }
    }
    Ok(GroupedReport {
        overall,
        per_dataset,
        skipped,
    })
}

impl EvalReport {
    /// Plain-text table, one row per class plus the all-class row.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        write!(
            out,
            "{:<10} {:>9} {:>9} {:>7} {:>7} {:>7} {:>7} {:>9}",
            "class", "instances", "dets", "P", "R", "F1", "mAP50", "mAP50-95"
        )
        .unwrap();
        for t in &self.ap_thresholds {
            write!(out, " {:>8}", format!("AP@{}", threshold_key(*t))).unwrap();
        }
        out.push('\n');
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        write!(
            out,
            "{:<10} {:>9} {:>9} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>9.3}",
            "all",
            self.all.instances,
            self.all.detections,
            self.all.precision,
            self.all.recall,
            self.all.f1,
            self.all.map50,
            self.all.map50_95
        )
        .unwrap();
        for t in &self.ap_thresholds {
            write!(out, " {:>8}", fmt(self.all.map.get(&threshold_key(*t)).copied())).unwrap();
        }
        out.push('\n');
        for c in &self.classes {
            write!(
                out,
                "{:<10} {:>9} {:>9} {:>7.3} {:>7.3} {:>7.3} {:>7} {:>9}",
                c.class,
                c.instances,
                c.detections,
                c.precision,
                c.recall,
                c.f1,
                fmt(c.ap50),
                fmt(c.ap50_95)
            )
            .unwrap();
            for t in &self.ap_thresholds {
                write!(out, " {:>8}", fmt(c.ap.get(&threshold_key(*t)).copied())).unwrap();
            }
            out.push('\n');
        }
        out
    }
}
