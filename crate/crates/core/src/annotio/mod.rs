//! Text formats used across the pipeline.
//!
//! Label and detection files follow the YOLO convention (one object per line,
//! center-form normalized coordinates). The CSV files use a fixed dialect:
//! comma separated, `\n` terminated, no quoting. Identifiers are restricted to
//! `[A-Za-z0-9_-]` so that quoting is never needed.

mod counts;
mod labels;
mod manifest;
mod stage_csv;
mod tiles;

pub use counts::{count_detections, parse_counts_csv, write_counts_csv, CountsRow, COUNTS_HEADER};
pub use labels::{
    parse_detection_file, parse_detection_records, parse_label_file, parse_label_records,
    write_detection_file, write_detection_records, write_label_file, write_label_records,
    DetectionRecord, LabelRecord,
};
pub use manifest::{parse_manifest_csv, write_manifest_csv, Condition, ManifestRow, MANIFEST_HEADER};
pub use stage_csv::{parse_stage_csv, write_stage_csv, RawStageRow, STAGE_HEADER};
pub use tiles::{tile_join, tile_split, PixelRect, TileMap};

use thiserror::Error;

use crate::stage::UnknownStage;

/// Values this far outside `[0, 1]` are treated as float noise and clamped.
pub const COORD_TOLERANCE: f64 = 1e-6;

/// Errors carry the 1-based line number of the offending record.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown class id {id}")]
    UnknownClass { line: usize, id: u32 },
    #[error("line {line}: {field} = {value} is out of range")]
    Range {
        line: usize,
        field: &'static str,
        value: f64,
    },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("bad header: expected '{expected}', found '{found}'")]
    Header { expected: String, found: String },
    #[error("line {line}: identifier '{id}' must be non-empty and use only [A-Za-z0-9_-]")]
    InvalidId { line: usize, id: String },
    #[error("line {line}: bad date '{value}', expected YYYY-MM-DD")]
    Date { line: usize, value: String },
    #[error("line {line}: {source}")]
    Stage { line: usize, source: UnknownStage },
    #[error("line {line}: unknown condition '{value}', expected one of BL, FL, pruned, unpruned, none")]
    Condition { line: usize, value: String },
    #[error("invalid tile map: {0}")]
    TileMap(String),
}

/// Identifiers use only `[A-Za-z0-9_-]` and are non-empty.
pub fn is_valid_id(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

pub(crate) fn check_id(s: &str, line: usize) -> Result<(), FormatError> {
    if is_valid_id(s) {
        Ok(())
    } else {
        Err(FormatError::InvalidId {
            line,
            id: s.to_string(),
        })
    }
}

/// Accepts `value` in `[0, 1]`, clamps values within [`COORD_TOLERANCE`] of
/// the interval, rejects anything else (including NaN).
pub(crate) fn unit_interval(value: f64, line: usize, field: &'static str) -> Result<f64, FormatError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if (-COORD_TOLERANCE..=1.0 + COORD_TOLERANCE).contains(&value) {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(FormatError::Range { line, field, value })
    }
}

pub(crate) fn parse_f64(token: &str, line: usize, field: &str) -> Result<f64, FormatError> {
    token.parse::<f64>().map_err(|_| FormatError::Parse {
        line,
        message: format!("{field}: '{token}' is not a number"),
    })
}

pub(crate) fn parse_date(token: &str, line: usize) -> Result<chrono::NaiveDate, FormatError> {
    chrono::NaiveDate::parse_from_str(token, "%Y-%m-%d").map_err(|_| FormatError::Date {
        line,
        value: token.to_string(),
    })
}

/// Splits a headered CSV into `(line_number, fields)` records, checking the
/// header and the column count. Blank lines are skipped.
pub(crate) fn csv_records<'a>(
    text: &'a str,
    header: &str,
) -> Result<Vec<(usize, Vec<&'a str>)>, FormatError> {
    let mut lines = text.lines().enumerate();
    let found = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .map(|(_, l)| l.trim_end_matches('\r'))
        .unwrap_or("");
    if found != header {
        return Err(FormatError::Header {
            expected: header.to_string(),
            found: found.to_string(),
        });
    }
    let ncols = header.split(',').count();
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let l = raw.trim_end_matches('\r');
        if l.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != ncols {
            return Err(FormatError::Parse {
                line: idx + 1,
                message: format!("expected {ncols} fields, found {}", fields.len()),
            });
        }
        out.push((idx + 1, fields));
    }
    Ok(out)
}
