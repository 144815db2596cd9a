use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{check_id, csv_records, FormatError};
use crate::geom::{ClassId, Detection};

pub const COUNTS_HEADER: &str = "image_id,bud,b_flower,w_flower";

/// Per-image flower tally.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRow {
    pub image_id: String,
    pub bud: u64,
    pub b_flower: u64,
    pub w_flower: u64,
}

impl CountsRow {
    pub fn new(image_id: impl Into<String>, bud: u64, b_flower: u64, w_flower: u64) -> Self {
        Self {
            image_id: image_id.into(),
            bud,
            b_flower,
            w_flower,
        }
    }

    pub fn total(&self) -> u64 {
        self.bud + self.b_flower + self.w_flower
    }

    pub fn get(&self, class: ClassId) -> u64 {
        [self.bud, self.b_flower, self.w_flower][class.index()]
    }
}

/// Tallies detections with `confidence >= conf_thresh` per class.
pub fn count_detections(image_id: &str, dets: &[Detection], conf_thresh: f64) -> CountsRow {
    let mut tally = [0u64; 3];
    for d in dets.iter().filter(|d| d.confidence >= conf_thresh) {
        tally[d.class_id.index()] += 1;
    }
    CountsRow::new(image_id, tally[0], tally[1], tally[2])
}

pub fn write_counts_csv(rows: &[CountsRow]) -> Result<String, FormatError> {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(COUNTS_HEADER);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        check_id(&r.image_id, i + 2)?;
        writeln!(out, "{},{},{},{}", r.image_id, r.bud, r.b_flower, r.w_flower).unwrap();
    }
    Ok(out)
}

pub fn parse_counts_csv(text: &str) -> Result<Vec<CountsRow>, FormatError> {
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (line, f) in csv_records(text, COUNTS_HEADER)? {
        check_id(f[0], line)?;
        if !seen.insert(f[0]) {
            return Err(FormatError::DuplicateKey {
                line,
                key: f[0].to_string(),
            });
        }
        let mut counts = [0u64; 3];
        for (k, field) in ["bud", "b_flower", "w_flower"].into_iter().enumerate() {
            let v: i64 = f[k + 1].parse().map_err(|_| FormatError::Parse {
                line,
                message: format!("{field}: '{}' is not an integer", f[k + 1]),
            })?;
            if v < 0 {
                return Err(FormatError::Range {
                    line,
                    field,
                    value: v as f64,
                });
            }
            counts[k] = v as u64;
        }
        rows.push(CountsRow::new(f[0], counts[0], counts[1], counts[2]));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BBox;

    fn d(class: ClassId, conf: f64) -> Detection {
        Detection {
            bbox: BBox::new(0.1, 0.1, 0.2, 0.2).unwrap(),
            class_id: class,
            confidence: conf,
        }
    }

    #[test]
    fn tally() {
        assert_eq!(count_detections("a", &[], 0.25), CountsRow::new("a", 0, 0, 0));
        let mut dets = vec![d(ClassId::BUD, 0.9); 3];
        dets.push(d(ClassId::W_FLOWER, 0.9));
        assert_eq!(count_detections("a", &dets, 0.25), CountsRow::new("a", 3, 0, 1));
        let low = vec![d(ClassId::BUD, 0.2); 2];
        assert_eq!(count_detections("a", &low, 0.25), CountsRow::new("a", 0, 0, 0));
        // threshold is inclusive
        assert_eq!(count_detections("a", &[d(ClassId::BUD, 0.25)], 0.25).bud, 1);
    }

    #[test]
    fn golden_output() {
        let csv = write_counts_csv(&[CountsRow::new("img1", 3, 0, 1)]).unwrap();
        assert_eq!(csv, "image_id,bud,b_flower,w_flower\nimg1,3,0,1\n");
        assert_eq!(write_counts_csv(&[]).unwrap(), "image_id,bud,b_flower,w_flower\n");
    }

    #[test]
    fn parse_errors() {
        let neg = "image_id,bud,b_flower,w_flower\nimg1,-1,0,0\n";
        assert!(matches!(
            parse_counts_csv(neg).unwrap_err(),
            FormatError::Range { line: 2, field: "bud", .. }
        ));
        let dup = "image_id,bud,b_flower,w_flower\nimg1,1,0,0\nimg1,2,0,0\n";
        assert!(matches!(
            parse_counts_csv(dup).unwrap_err(),
            FormatError::DuplicateKey { line: 3, .. }
        ));
        let frac = "image_id,bud,b_flower,w_flower\nimg1,1.5,0,0\n";
        assert!(matches!(parse_counts_csv(frac).unwrap_err(), FormatError::Parse { .. }));
        assert!(write_counts_csv(&[CountsRow::new("a,b", 0, 0, 0)]).is_err());
    }
}
