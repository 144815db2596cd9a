//! Flowering dynamics: per-accession series, stage timelines, quantity
//! levels and condition comparisons.

mod report;
mod series;
mod stats;

pub use report::{
    canonical_json, comparison_csv, compare_conditions, emit_report, report_json, series_csv, series_svg, stage_color,
    summary_csv, DynamicsReport, COMPARISON_CSV, CONDITION_PAIRS, REPORT_JSON, SERIES_CSV, SUMMARY_CSV,
};
pub use series::{
    aggregate_series, join_counts, quantity_level, stage_timeline, stage_timelines, AccessionSeries, CountObservation,
    FloweringSummary, SeriesPoint, DEFAULT_LEVEL_THRESHOLDS,
};
pub use stats::{
    betainc, compare_groups, compare_named, ln_gamma, student_t_cdf, two_sided_p, GroupComparison, GroupStats,
    WELCH_TEST,
};

use thiserror::Error;

use crate::tfsc::TfscError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("group {group} has {n} values, need at least 2")]
    TooFewValues { group: String, n: usize },
    #[error("group {0} contains non-finite values")]
    NonFinite(String),
    #[error("{0}")]
    Thresholds(String),
    #[error("images missing from the manifest: {}", .0.join(", "))]
    MissingManifest(Vec<String>),
    #[error(transparent)]
    Stage(#[from] TfscError),
}
