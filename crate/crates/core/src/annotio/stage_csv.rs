use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{check_id, csv_records, parse_date, parse_f64, FormatError};
use crate::stage::StageLabel;

pub const STAGE_HEADER: &str = "accession,date,bud,b_flower,w_flower,stage";

/// One image's flower counts with its (optional) manual stage label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStageRow {
    pub accession: String,
    pub date: NaiveDate,
    pub bud: f64,
    pub b_flower: f64,
    pub w_flower: f64,
    pub stage: Option<StageLabel>,
}

impl RawStageRow {
    pub fn counts(&self) -> [f64; 3] {
        [self.bud, self.b_flower, self.w_flower]
    }

    pub fn total(&self) -> f64 {
        self.bud + self.b_flower + self.w_flower
    }
}

pub fn parse_stage_csv(text: &str) -> Result<Vec<RawStageRow>, FormatError> {
    let mut rows = Vec::new();
    for (line, f) in csv_records(text, STAGE_HEADER)? {
        check_id(f[0], line)?;
        let date = parse_date(f[1], line)?;
        let mut counts = [0.0; 3];
        for (k, field) in ["bud", "b_flower", "w_flower"].into_iter().enumerate() {
            let v = parse_f64(f[k + 2], line, field)?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(FormatError::Range { line, field, value: v });
            }
            counts[k] = v;
        }
        let stage = match f[5] {
            "" => None,
            tok => Some(
                tok.parse::<StageLabel>()
                    .map_err(|source| FormatError::Stage { line, source })?,
            ),
        };
        rows.push(RawStageRow {
            accession: f[0].to_string(),
            date,
            bud: counts[0],
            b_flower: counts[1],
            w_flower: counts[2],
            stage,
        });
    }
    Ok(rows)
}

pub fn write_stage_csv(rows: &[RawStageRow]) -> Result<String, FormatError> {
    let mut out = String::new();
    out.push_str(STAGE_HEADER);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        check_id(&r.accession, i + 2)?;
        let stage = r.stage.map(StageLabel::as_str).unwrap_or("");
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.accession,
            r.date.format("%Y-%m-%d"),
            r.bud,
            r.b_flower,
            r.w_flower,
            stage
        )
        .unwrap();
    }
    Ok(out)
}
