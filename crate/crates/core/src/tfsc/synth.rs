//! Seeded synthetic stage data: Gaussian count clusters laid out along the
//! ordinal stage sequence, with per-accession phenology shifts.

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::annotio::RawStageRow;
use crate::stage::StageLabel;

/// Mean (bud, b_flower, w_flower) per image for each stage.
const STAGE_MEANS: [[f64; 3]; 5] = [
    [60.0, 5.0, 0.0],
    [45.0, 20.0, 3.0],
    [30.0, 35.0, 10.0],
    [15.0, 25.0, 25.0],
    [5.0, 8.0, 40.0],
];
/// First observation day of each stage, counted from October 1.
const STAGE_DAYS: [u64; 5] = [40, 55, 70, 85, 100];
const DATE_STEP: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMode {
    /// Tight clusters, linearly separable.
    Separable,
    /// Wide clusters whose neighbours along the stage sequence overlap.
    Overlapping,
}

impl ClusterMode {
    /// (count sd per image, accession shift sd in days)
    fn spread(self) -> (f64, f64) {
        match self {
            ClusterMode::Separable => (2.0, 1.0),
            ClusterMode::Overlapping => (30.0, 6.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub mode: ClusterMode,
    pub accessions: usize,
    /// Observation dates per stage and accession, at most 5.
    pub dates_per_stage: usize,
    pub images_per_date: usize,
    pub season_years: Vec<i32>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(mode: ClusterMode, seed: u64) -> Self {
        Self {
            mode,
            accessions: 30,
            dates_per_stage: 4,
            images_per_date: 3,
            season_years: vec![2023],
            seed,
        }
    }
}

/// Labeled image rows, three per accession and date by default.
pub fn synthetic_stage_rows(cfg: &SynthConfig) -> Vec<RawStageRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (count_sd, shift_sd) = cfg.mode.spread();
    let noise = Normal::new(0.0, count_sd).expect("positive sd");
    let shift = Normal::new(0.0, shift_sd).expect("positive sd");
    let dates = cfg.dates_per_stage.min(5) as u64;
    let mut rows = Vec::new();
    for &year in &cfg.season_years {
        let start = NaiveDate::from_ymd_opt(year, 10, 1).expect("valid season year");
        for a in 0..cfg.accessions {
            let accession = format!("TA{year}{a:03}");
            // shifts stay inside ±7 days so a stage's dates never collide with the next
            let offset = shift.sample(&mut rng).round().clamp(-7.0, 7.0) as i64;
            for (s, stage) in StageLabel::ALL.into_iter().enumerate() {
                for k in 0..dates {
                    let day = (STAGE_DAYS[s] + DATE_STEP * k) as i64 + offset;
                    let date = start + Days::new(day as u64);
                    for _ in 0..cfg.images_per_date {
                        let c: Vec<f64> = STAGE_MEANS[s]
                            .iter()
                            .map(|m| (m + noise.sample(&mut rng)).round().max(0.0))
                            .collect();
                        rows.push(RawStageRow {
                            accession: accession.clone(),
                            date,
                            bud: c[0],
                            b_flower: c[1],
                            w_flower: c[2],
                            stage: Some(stage),
                        });
                    }
                }
            }
        }
    }
    rows
}
