//! Flowering-stage dataset construction: quality filter, triplet averaging,
//! time encoding, stratified train/val split and feature standardization.

use std::collections::{BTreeSet, HashMap};

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TfscError;
use crate::annotio::RawStageRow;
use crate::stage::StageLabel;

pub const NUM_FEATURES: usize = 4;
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = ["bud", "b_flower", "w_flower", "time"];

/// Earliest accepted date relative to the season start, in days.
pub const SEASON_LEAD_DAYS: i64 = 30;
/// Latest accepted date relative to the season start, in days.
pub const SEASON_SPAN_DAYS: i64 = 365;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Accession/date groups whose mean total count is below this are dropped.
    pub min_mean_total: f64,
    pub val_fraction: f64,
    /// Samples whose season starts in one of these years form the test split.
    pub test_season_years: Vec<i32>,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            min_mean_total: 5.0,
            val_fraction: 0.2,
            test_season_years: vec![2024],
            seed: 42,
        }
    }
}

/// October 1 of the flowering season containing `date`. Dates from
/// September onwards belong to that year's season, earlier dates to the
/// previous year's.
pub fn season_start_for(date: NaiveDate) -> NaiveDate {
    let year = if date.month() >= 9 { date.year() } else { date.year() - 1 };
    NaiveDate::from_ymd_opt(year, 10, 1).expect("October 1 exists")
}

/// Days since `season_start`, divided by 100.
pub fn encode_time(date: NaiveDate, season_start: NaiveDate) -> Result<f64, TfscError> {
    let days = (date - season_start).num_days();
    if !(-SEASON_LEAD_DAYS..=SEASON_SPAN_DAYS).contains(&days) {
        return Err(TfscError::TimeRange {
            date,
            season_start,
            days,
        });
    }
    Ok(days as f64 / 100.0)
}

/// Drops every (accession, date) group whose mean total count is below
/// `min_mean_total`. Row order is preserved.
pub fn filter_low_quality(rows: &[RawStageRow], min_mean_total: f64) -> Vec<RawStageRow> {
    let mut sums: HashMap<(&str, NaiveDate), (f64, usize)> = HashMap::new();
    for r in rows {
        let e = sums.entry((r.accession.as_str(), r.date)).or_insert((0.0, 0));
        e.0 += r.total();
        e.1 += 1;
    }
    rows.iter()
        .filter(|r| {
            let (sum, n) = sums[&(r.accession.as_str(), r.date)];
            sum / n as f64 >= min_mean_total
        })
        .cloned()
        .collect()
}

/// One averaged sample before time encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRow {
    pub accession: String,
    pub date: NaiveDate,
    pub counts: [f64; 3],
    pub stage: Option<StageLabel>,
    /// Number of raw rows averaged into this one (1 to 3).
    pub group_size: usize,
}

/// Groups rows by (accession, date) in order of first appearance and averages
/// consecutive runs of three. A trailing run of one or two rows becomes one
/// more sample. All rows of a group must carry the same stage label.
pub fn triplet_average(rows: &[RawStageRow]) -> Result<Vec<AveragedRow>, TfscError> {
    let mut order: Vec<(&str, NaiveDate)> = Vec::new();
    let mut groups: HashMap<(&str, NaiveDate), Vec<&RawStageRow>> = HashMap::new();
    for r in rows {
        let key = (r.accession.as_str(), r.date);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    let mut out = Vec::new();
    for key in order {
        let members = &groups[&key];
        let stage = members[0].stage;
        if let Some(bad) = members.iter().find(|r| r.stage != stage) {
            return Err(TfscError::InconsistentLabels {
                accession: key.0.to_string(),
                date: key.1,
                first: stage,
                other: bad.stage,
            });
        }
        for chunk in members.chunks(3) {
            let n = chunk.len() as f64;
            let mut counts = [0.0; 3];
            for r in chunk {
                for (c, v) in counts.iter_mut().zip(r.counts()) {
                    *c += v;
                }
            }
            out.push(AveragedRow {
                accession: key.0.to_string(),
                date: key.1,
                counts: counts.map(|c| c / n),
                stage,
                group_size: chunk.len(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSample {
    pub accession: String,
    pub date: NaiveDate,
    /// Raw (unstandardized) `[bud, b_flower, w_flower, time]`.
    pub features: [f64; NUM_FEATURES],
    pub label: StageLabel,
}

impl StageSample {
    pub fn from_counts(
        accession: &str,
        date: NaiveDate,
        counts: [f64; 3],
        label: StageLabel,
    ) -> Result<Self, TfscError> {
        let time = encode_time(date, season_start_for(date))?;
        Ok(Self {
            accession: accession.to_string(),
            date,
            features: [counts[0], counts[1], counts[2], time],
            label,
        })
    }
}

/// Per-feature standardization fitted on the training split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features with zero spread on the training data; they are only centered.
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit(rows: &[[f64; NUM_FEATURES]]) -> Result<Self, TfscError> {
        if rows.is_empty() {
            return Err(TfscError::EmptyTrain);
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; NUM_FEATURES];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; NUM_FEATURES];
        for r in rows {
            for k in 0..NUM_FEATURES {
                var[k] += (r[k] - mean[k]).powi(2);
            }
        }
        let mut std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        let constant: Vec<bool> = std.iter().map(|&s| s <= 0.0).collect();
        for (s, &c) in std.iter_mut().zip(&constant) {
            if c {
                *s = 1.0;
            }
        }
        Ok(Self { mean, std, constant })
    }

    pub fn is_fitted(&self) -> bool {
        !self.mean.is_empty()
    }

    fn check(&self, x: &[f64]) -> Result<(), TfscError> {
        if !self.is_fitted() {
            return Err(TfscError::ScalerNotFitted);
        }
        if x.len() != self.mean.len() {
            return Err(TfscError::FeatureCount {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(TfscError::NonFiniteFeature);
        }
        Ok(())
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, TfscError> {
        self.check(x)?;
        Ok(x.iter()
            .enumerate()
            .map(|(k, v)| (v - self.mean[k]) / self.std[k])
            .collect())
    }

    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>, TfscError> {
        self.check(z)?;
        Ok(z.iter()
            .enumerate()
            .map(|(k, v)| v * self.std[k] + self.mean[k])
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDataset {
    pub train: Vec<StageSample>,
    pub val: Vec<StageSample>,
    pub test: Vec<StageSample>,
    pub scaler: Scaler,
    /// Rows without a stage label, excluded before construction.
    pub unlabeled_excluded: usize,
    /// Rows removed by the low-count filter.
    pub filtered_out: usize,
    pub warnings: Vec<String>,
}

impl StageDataset {
    /// Standardized features and label indices of a split.
    pub fn standardized(&self, split: &[StageSample]) -> Result<(Vec<Vec<f64>>, Vec<usize>), TfscError> {
        let xs = split
            .iter()
            .map(|s| self.scaler.transform(&s.features))
            .collect::<Result<_, _>>()?;
        Ok((xs, split.iter().map(|s| s.label.index()).collect()))
    }
}

/// Number of validation samples for a stage with `n` samples.
pub fn val_count(n: usize, val_fraction: f64) -> usize {
    ((n as f64 * val_fraction).round() as usize).min(n)
}

/// Full construction: drop unlabeled rows, filter, triplet-average, encode
/// time, route test seasons, split the rest 8:2 stratified by stage with a
/// seeded shuffle, and fit the scaler on the training split.
pub fn build_stage_dataset(rows: &[RawStageRow], cfg: &DatasetConfig) -> Result<StageDataset, TfscError> {
    if !(0.0..1.0).contains(&cfg.val_fraction) || cfg.min_mean_total.is_nan() || cfg.min_mean_total < 0.0 {
        return Err(TfscError::Config(format!(
            "val_fraction must be in [0, 1) and min_mean_total >= 0, got {} and {}",
            cfg.val_fraction, cfg.min_mean_total
        )));
    }
    let labeled: Vec<RawStageRow> = rows.iter().filter(|r| r.stage.is_some()).cloned().collect();
    let unlabeled_excluded = rows.len() - labeled.len();
    let kept = filter_low_quality(&labeled, cfg.min_mean_total);
    let filtered_out = labeled.len() - kept.len();

    let mut pool = Vec::new();
    let mut test = Vec::new();
    for avg in triplet_average(&kept)? {
        let label = avg.stage.expect("unlabeled rows removed");
        let sample = StageSample::from_counts(&avg.accession, avg.date, avg.counts, label)?;
        let season_year = season_start_for(avg.date).year();
        if cfg.test_season_years.contains(&season_year) {
            test.push(sample);
        } else {
            pool.push(sample);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for stage in StageLabel::ALL {
        let mut idx: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].label == stage).collect();
        idx.shuffle(&mut rng);
        let n_val = val_count(idx.len(), cfg.val_fraction);
        val_idx.extend_from_slice(&idx[..n_val]);
        train_idx.extend_from_slice(&idx[n_val..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    let train: Vec<StageSample> = train_idx.iter().map(|&i| pool[i].clone()).collect();
    let val: Vec<StageSample> = val_idx.iter().map(|&i| pool[i].clone()).collect();
    if train.is_empty() {
        return Err(TfscError::EmptyTrain);
    }

    let mut warnings = Vec::new();
    if unlabeled_excluded > 0 {
        warnings.push(format!("{unlabeled_excluded} unlabeled rows excluded"));
    }
    let present: BTreeSet<StageLabel> = train.iter().map(|s| s.label).collect();
    for stage in StageLabel::ALL.iter().filter(|s| !present.contains(s)) {
        warnings.push(format!("stage {stage} has no training samples"));
    }
    let scaler = Scaler::fit(&train.iter().map(|s| s.features).collect::<Vec<_>>())?;
    for (k, &c) in scaler.constant.iter().enumerate() {
        if c {
            warnings.push(format!("feature {} is constant on the training split", FEATURE_NAMES[k]));
        }
    }

    Ok(StageDataset {
        train,
        val,
        test,
        scaler,
        unlabeled_excluded,
        filtered_out,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn row(acc: &str, date: NaiveDate, bud: f64, stage: Option<StageLabel>) -> RawStageRow {
        RawStageRow {
            accession: acc.into(),
            date,
            bud,
            b_flower: 0.0,
            w_flower: 0.0,
            stage,
        }
    }

    #[test]
    fn time_encoding() {
        let start = d(2023, 10, 1);
        assert_eq!(encode_time(start, start).unwrap(), 0.0);
        assert_eq!(encode_time(start + chrono::Days::new(50), start).unwrap(), 0.5);
        assert_eq!(encode_time(d(2023, 11, 15), start).unwrap(), 0.45);
        assert!(encode_time(d(2023, 8, 1), start).is_err());
        assert!(encode_time(d(2025, 1, 1), start).is_err());
        assert_eq!(season_start_for(d(2024, 1, 10)), start);
        assert_eq!(season_start_for(d(2023, 9, 20)), start);
    }

    #[test]
    fn low_quality_filter() {
        let day = d(2023, 11, 1);
        let rows = vec![
            row("A", day, 0.0, None),
            row("A", day, 0.0, None),
            row("B", day, 50.0, None),
            row("C", day, 4.0, None),
            row("C", day, 6.0, None),
        ];
        let kept = filter_low_quality(&rows, 5.0);
        assert_eq!(kept.iter().map(|r| r.accession.as_str()).collect::<Vec<_>>(), ["B", "C", "C"]);
    }

    #[test]
    fn triplet_grouping() {
        let day = d(2023, 11, 1);
        let rows: Vec<_> = [3.0, 6.0, 9.0].iter().map(|&b| row("A", day, b, None)).collect();
        let avg = triplet_average(&rows).unwrap();
        assert_eq!(avg.len(), 1);
        assert_eq!(avg[0].counts[0], 6.0);

        let seven: Vec<_> = (0..7).map(|i| row("A", day, i as f64, None)).collect();
        let avg = triplet_average(&seven).unwrap();
        assert_eq!(avg.iter().map(|a| a.group_size).collect::<Vec<_>>(), [3, 3, 1]);
        assert_eq!(avg[2].counts[0], 6.0);

        let two: Vec<_> = (0..2).map(|i| row("A", day, i as f64, None)).collect();
        assert_eq!(triplet_average(&two).unwrap().len(), 1);
    }

    #[test]
    fn triplet_rejects_conflicting_labels() {
        let day = d(2023, 11, 1);
        let rows = vec![row("A", day, 1.0, Some(StageLabel::IFS)), row("A", day, 1.0, Some(StageLabel::EFS))];
        assert!(matches!(triplet_average(&rows), Err(TfscError::InconsistentLabels { .. })));
    }

    #[test]
    fn groups_do_not_mix_accessions_or_dates() {
        let rows = vec![
            row("A", d(2023, 11, 1), 1.0, None),
            row("B", d(2023, 11, 1), 2.0, None),
            row("A", d(2023, 11, 2), 3.0, None),
            row("A", d(2023, 11, 1), 5.0, None),
        ];
        let avg = triplet_average(&rows).unwrap();
        assert_eq!(avg.len(), 3);
        assert_eq!(avg[0].counts[0], 3.0);
        assert_eq!(avg[0].group_size, 2);
    }

    fn labeled_rows(per_stage: usize, year: i32) -> Vec<RawStageRow> {
        let mut rows = Vec::new();
        for (s, stage) in StageLabel::ALL.iter().enumerate() {
            for k in 0..per_stage {
                let date = d(year, 10, 1) + chrono::Days::new((s * 12 + k) as u64);
                rows.push(RawStageRow {
                    accession: format!("acc{k}"),
                    date,
                    bud: 10.0 + s as f64 * 3.0 + k as f64,
                    b_flower: 5.0 * s as f64,
                    w_flower: k as f64,
                    stage: Some(*stage),
                });
            }
        }
        rows
    }

    #[test]
    fn stratified_split_and_scaler() {
        let ds = build_stage_dataset(&labeled_rows(10, 2023), &DatasetConfig::default()).unwrap();
        for stage in StageLabel::ALL {
            assert_eq!(ds.train.iter().filter(|s| s.label == stage).count(), 8);
            assert_eq!(ds.val.iter().filter(|s| s.label == stage).count(), 2);
        }
        assert!(ds.test.is_empty());
        let (xs, _) = ds.standardized(&ds.train).unwrap();
        for k in 0..NUM_FEATURES {
            let mean: f64 = xs.iter().map(|x| x[k]).sum::<f64>() / xs.len() as f64;
            let var: f64 = xs.iter().map(|x| (x[k] - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            assert!(mean.abs() < 1e-9 && (var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn test_season_routing() {
        let mut rows = labeled_rows(5, 2023);
        rows.extend(labeled_rows(3, 2024));
        let ds = build_stage_dataset(&rows, &DatasetConfig::default()).unwrap();
        assert_eq!(ds.test.len(), 15);
        assert!(ds.test.iter().all(|s| s.date.year() == 2024));
        assert!(ds.train.iter().chain(&ds.val).all(|s| s.date.year() == 2023));
    }

    #[test]
    fn warnings_and_errors() {
        let mut rows: Vec<_> = labeled_rows(4, 2023)
            .into_iter()
            .filter(|r| r.stage != Some(StageLabel::TFS))
            .collect();
        rows.push(row("X", d(2023, 11, 3), 30.0, None));
        let ds = build_stage_dataset(&rows, &DatasetConfig::default()).unwrap();
        assert_eq!(ds.unlabeled_excluded, 1);
        assert!(ds.warnings.iter().any(|w| w.contains("TFS")));

        let only_test = labeled_rows(2, 2024);
        assert!(matches!(
            build_stage_dataset(&only_test, &DatasetConfig::default()),
            Err(TfscError::EmptyTrain)
        ));
    }

    #[test]
    fn scaler_errors_and_round_trip() {
        assert!(matches!(Scaler::default().transform(&[1.0; 4]), Err(TfscError::ScalerNotFitted)));
        let s = Scaler::fit(&[[1.0, 2.0, 3.0, 0.1], [3.0, 2.0, 5.0, 0.4]]).unwrap();
        assert_eq!(s.constant, vec![false, true, false, false]);
        let x = [2.5, 7.0, -1.0, 0.3];
        let back = s.inverse(&s.transform(&x).unwrap()).unwrap();
        for (a, b) in back.iter().zip(x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(s.transform(&[1.0]), Err(TfscError::FeatureCount { .. })));
    }
}
