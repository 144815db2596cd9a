use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{check_id, csv_records, parse_date, FormatError};

pub const MANIFEST_HEADER: &str = "image_id,accession,date,condition";

/// Imaging or management condition attached to an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "BL")]
    Backlight,
    #[serde(rename = "FL")]
    Frontlight,
    #[serde(rename = "pruned")]
    Pruned,
    #[serde(rename = "unpruned")]
    Unpruned,
    #[serde(rename = "none")]
    None,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Backlight => "BL",
            Condition::Frontlight => "FL",
            Condition::Pruned => "pruned",
            Condition::Unpruned => "unpruned",
            Condition::None => "none",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "BL" => Condition::Backlight,
            "FL" => Condition::Frontlight,
            "pruned" => Condition::Pruned,
            "unpruned" => Condition::Unpruned,
            "none" => Condition::None,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub image_id: String,
    pub accession: String,
    pub date: NaiveDate,
    pub condition: Condition,
}

pub fn parse_manifest_csv(text: &str) -> Result<Vec<ManifestRow>, FormatError> {
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (line, f) in csv_records(text, MANIFEST_HEADER)? {
        check_id(f[0], line)?;
        check_id(f[1], line)?;
        if !seen.insert(f[0]) {
            return Err(FormatError::DuplicateKey {
                line,
                key: f[0].to_string(),
            });
        }
        let condition = f[3].parse().map_err(|_| FormatError::Condition {
            line,
            value: f[3].to_string(),
        })?;
        rows.push(ManifestRow {
            image_id: f[0].to_string(),
            accession: f[1].to_string(),
            date: parse_date(f[2], line)?,
            condition,
        });
    }
    Ok(rows)
}

pub fn write_manifest_csv(rows: &[ManifestRow]) -> Result<String, FormatError> {
    let mut out = String::new();
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        check_id(&r.image_id, i + 2)?;
        check_id(&r.accession, i + 2)?;
        writeln!(
            out,
            "{},{},{},{}",
            r.image_id,
            r.accession,
            r.date.format("%Y-%m-%d"),
            r.condition
        )
        .unwrap();
    }
    Ok(out)
}
