//! Per-accession time series, stage timelines and quantity levels.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::annotio::{Condition, CountsRow, ManifestRow};
use crate::stage::StageLabel;
use crate::tfsc::{encode_time, season_start_for, StageClassifier};

pub const DEFAULT_LEVEL_THRESHOLDS: [f64; 3] = [5.0, 20.0, 50.0];

/// One image's counts joined with its manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountObservation {
    pub image_id: String,
    pub accession: String,
    pub date: NaiveDate,
    pub condition: Condition,
    /// `[bud, b_flower, w_flower]`
    pub counts: [f64; 3],
}

impl CountObservation {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Joins counts with the manifest by image id. Every counted image must
/// appear in the manifest; manifest entries without counts are ignored.
pub fn join_counts(counts: &[CountsRow], manifest: &[ManifestRow]) -> Result<Vec<CountObservation>, DynamicsError> {
    let by_id: HashMap<&str, &ManifestRow> = manifest.iter().map(|m| (m.image_id.as_str(), m)).collect();
    let missing: Vec<String> = counts
        .iter()
        .filter(|c| !by_id.contains_key(c.image_id.as_str()))
        .map(|c| c.image_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(DynamicsError::MissingManifest(missing));
    }
    Ok(counts
        .iter()
        .map(|c| {
            let m = by_id[c.image_id.as_str()];
            CountObservation {
                image_id: c.image_id.clone(),
                accession: m.accession.clone(),
                date: m.date,
                condition: m.condition,
                counts: [c.bud as f64, c.b_flower as f64, c.w_flower as f64],
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: NaiveDate,
    pub bud: f64,
    pub b_flower: f64,
    pub w_flower: f64,
    /// Images averaged into this point.
    pub n: usize,
    pub stage: Option<StageLabel>,
    pub level: Option<usize>,
}

impl SeriesPoint {
    pub fn means(&self) -> [f64; 3] {
        [self.bud, self.b_flower, self.w_flower]
    }

    pub fn total(&self) -> f64 {
        self.bud + self.b_flower + self.w_flower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessionSeries {
    pub accession: String,
    /// Strictly increasing dates.
    pub points: Vec<SeriesPoint>,
}

impl AccessionSeries {
    pub fn assign_levels(&mut self, thresholds: &[f64]) -> Result<(), DynamicsError> {
        check_thresholds(thresholds)?;
        for p in &mut self.points {
            p.level = Some(level_of(p.total(), thresholds));
        }
        Ok(())
    }
}

/// Per accession and date, the mean of each count over images. Accessions
/// are sorted by id, points by date.
pub fn aggregate_series(obs: &[CountObservation]) -> Vec<AccessionSeries> {
    let mut acc: BTreeMap<&str, BTreeMap<NaiveDate, ([f64; 3], usize)>> = BTreeMap::new();
    for o in obs {
        let slot = acc
            .entry(o.accession.as_str())
            .or_default()
            .entry(o.date)
            .or_insert(([0.0; 3], 0));
        for (s, c) in slot.0.iter_mut().zip(o.counts) {
            *s += c;
        }
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(accession, dates)| AccessionSeries {
            accession: accession.to_string(),
            points: dates
                .into_iter()
                .map(|(date, (sums, n))| SeriesPoint {
                    date,
                    bud: sums[0] / n as f64,
                    b_flower: sums[1] / n as f64,
                    w_flower: sums[2] / n as f64,
                    n,
                    stage: None,
                    level: None,
                })
                .collect(),
        })
        .collect()
}

fn check_thresholds(thresholds: &[f64]) -> Result<(), DynamicsError> {
    let ascending = thresholds.windows(2).all(|w| w[0] < w[1]);
    if !ascending || thresholds.iter().any(|t| !t.is_finite()) {
        return Err(DynamicsError::Thresholds(format!(
            "quantity thresholds must be finite and strictly ascending, got {thresholds:?}"
        )));
    }
    Ok(())
}

fn level_of(mean_total: f64, thresholds: &[f64]) -> usize {
    thresholds.iter().filter(|&&t| t <= mean_total).count()
}

/// Number of thresholds at or below `mean_total`.
pub fn quantity_level(mean_total: f64, thresholds: &[f64]) -> Result<usize, DynamicsError> {
    check_thresholds(thresholds)?;
    Ok(level_of(mean_total, thresholds))
}

/// Flowering period extracted from predicted stages.
///
/// * onset: first point with flowers whose stage is not TFS
/// * peak: first and last peak-stage (EFS, MFS, LFS) point with flowers
/// * terminal: first TFS point after the peak, or after onset when there is
///   no peak, or anywhere when there is neither
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloweringSummary {
    pub accession: String,
    pub onset: Option<NaiveDate>,
    pub peak_start: Option<NaiveDate>,
    pub peak_end: Option<NaiveDate>,
    pub terminal: Option<NaiveDate>,
}

impl FloweringSummary {
    pub fn is_ordered(&self) -> bool {
        let seq: Vec<NaiveDate> = [self.onset, self.peak_start, self.peak_end, self.terminal]
            .into_iter()
            .flatten()
            .collect();
        seq.windows(2).all(|w| w[0] <= w[1])
    }

    /// Requires stages on every point; series shorter than two points get an
    /// empty summary.
    pub fn from_series(series: &AccessionSeries) -> Self {
        let mut s = FloweringSummary {
            accession: series.accession.clone(),
            ..Default::default()
        };
        if series.points.len() < 2 {
            return s;
        }
        let staged: Vec<(&SeriesPoint, StageLabel)> = series
            .points
            .iter()
            .filter_map(|p| p.stage.map(|st| (p, st)))
            .collect();
        let flowering = |p: &SeriesPoint| p.total() > 0.0;
        s.onset = staged
            .iter()
            .find(|(p, st)| flowering(p) && *st != StageLabel::TFS)
            .map(|(p, _)| p.date);
        let peak: Vec<NaiveDate> = staged
            .iter()
            .filter(|(p, st)| flowering(p) && st.is_peak())
            .map(|(p, _)| p.date)
            .collect();
        s.peak_start = peak.first().copied();
        s.peak_end = peak.last().copied();
        let after = s.peak_end.or(s.onset);
        s.terminal = staged
            .iter()
            .find(|(p, st)| *st == StageLabel::TFS && after.is_none_or(|a| p.date >= a))
            .map(|(p, _)| p.date);
        s
    }
}

/// Predicts a stage for every point from its mean counts and season time.
pub fn stage_timeline(
    series: &AccessionSeries,
    classifier: &StageClassifier,
) -> Result<(AccessionSeries, FloweringSummary), DynamicsError> {
    let mut out = series.clone();
    for p in &mut out.points {
        let time = encode_time(p.date, season_start_for(p.date))?;
        let [bud, bf, wf] = p.means();
        p.stage = Some(classifier.predict(&[bud, bf, wf, time])?.0);
    }
    let summary = FloweringSummary::from_series(&out);
    Ok((out, summary))
}

/// [`stage_timeline`] over many accessions in parallel, in input order.
pub fn stage_timelines(
    series: &[AccessionSeries],
    classifier: &StageClassifier,
) -> Result<Vec<(AccessionSeries, FloweringSummary)>, DynamicsError> {
    series.par_iter().map(|s| stage_timeline(s, classifier)).collect()
}
