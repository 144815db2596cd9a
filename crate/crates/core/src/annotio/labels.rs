use std::fmt::Write as _;

use super::{parse_f64, unit_interval, FormatError};
use crate::geom::{BBox, ClassId, Detection, GroundTruthBox};

/// One line of a YOLO label file, center form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelRecord {
    pub class_id: ClassId,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

/// A label line followed by a detector confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub label: LabelRecord,
    pub confidence: f64,
}

impl LabelRecord {
    /// Corner-form box, clamped into the unit square.
    pub fn bbox(&self) -> BBox {
        let b = BBox::from_center(self.cx, self.cy, self.w, self.h)
            .expect("validated center form has non-negative size");
        b.clamp(0.0, 1.0)
    }

    pub fn from_bbox(class_id: ClassId, b: &BBox) -> Self {
        let (cx, cy, w, h) = b.to_center();
        Self { class_id, cx, cy, w, h }
    }

    pub fn to_ground_truth(&self) -> GroundTruthBox {
        GroundTruthBox {
            bbox: self.bbox(),
            class_id: self.class_id,
        }
    }
}

impl DetectionRecord {
    pub fn to_detection(&self) -> Detection {
        Detection {
            bbox: self.label.bbox(),
            class_id: self.label.class_id,
            confidence: self.confidence,
        }
    }

    pub fn from_detection(d: &Detection) -> Self {
        Self {
            label: LabelRecord::from_bbox(d.class_id, &d.bbox),
            confidence: d.confidence,
        }
    }
}

fn parse_fields(line: &str, lineno: usize, arity: usize) -> Result<(LabelRecord, Option<f64>), FormatError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != arity {
        return Err(FormatError::Parse {
            line: lineno,
            message: format!("expected {arity} fields, found {}", fields.len()),
        });
    }
    let raw_class: u32 = fields[0].parse().map_err(|_| FormatError::Parse {
        line: lineno,
        message: format!("class: '{}' is not a non-negative integer", fields[0]),
    })?;
    let class_id = ClassId::new(raw_class).map_err(|_| FormatError::UnknownClass {
        line: lineno,
        id: raw_class,
    })?;
    const NAMES: [&str; 5] = ["cx", "cy", "w", "h", "confidence"];
    let mut vals = [0.0; 5];
    for (k, tok) in fields[1..].iter().enumerate() {
        let v = parse_f64(tok, lineno, NAMES[k])?;
        vals[k] = unit_interval(v, lineno, NAMES[k])?;
    }
    let rec = LabelRecord {
        class_id,
        cx: vals[0],
        cy: vals[1],
        w: vals[2],
        h: vals[3],
    };
    Ok((rec, (arity == 6).then_some(vals[4])))
}

fn non_blank(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn parse_label_records(text: &str) -> Result<Vec<LabelRecord>, FormatError> {
    non_blank(text)
        .map(|(n, l)| parse_fields(l, n, 5).map(|(r, _)| r))
        .collect()
}

pub fn parse_detection_records(text: &str) -> Result<Vec<DetectionRecord>, FormatError> {
    non_blank(text)
        .map(|(n, l)| {
            parse_fields(l, n, 6).map(|(label, conf)| DetectionRecord {
                label,
                confidence: conf.unwrap_or_default(),
            })
        })
        .collect()
}

/// Parses a YOLO label file into corner-form ground-truth boxes.
pub fn parse_label_file(text: &str) -> Result<Vec<GroundTruthBox>, FormatError> {
    Ok(parse_label_records(text)?
        .iter()
        .map(LabelRecord::to_ground_truth)
        .collect())
}

/// Parses a detection file (label line plus trailing confidence).
pub fn parse_detection_file(text: &str) -> Result<Vec<Detection>, FormatError> {
    Ok(parse_detection_records(text)?
        .iter()
        .map(DetectionRecord::to_detection)
        .collect())
}

pub fn write_label_records(records: &[LabelRecord]) -> String {
    let mut out = String::new();
    for r in records {
        writeln!(out, "{} {} {} {} {}", u32::from(r.class_id), r.cx, r.cy, r.w, r.h).unwrap();
    }
    out
}

pub fn write_detection_records(records: &[DetectionRecord]) -> String {
    let mut out = String::new();
    for d in records {
        let r = &d.label;
        writeln!(
            out,
            "{} {} {} {} {} {}",
            u32::from(r.class_id),
            r.cx,
            r.cy,
            r.w,
            r.h,
            d.confidence
        )
        .unwrap();
    }
    out
}

pub fn write_label_file(boxes: &[GroundTruthBox]) -> String {
    let recs: Vec<_> = boxes
        .iter()
        .map(|g| LabelRecord::from_bbox(g.class_id, &g.bbox))
        .collect();
    write_label_records(&recs)
}

pub fn write_detection_file(dets: &[Detection]) -> String {
    let recs: Vec<_> = dets.iter().map(DetectionRecord::from_detection).collect();
    write_detection_records(&recs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_line_to_corners() {
        let boxes = parse_label_file("0 0.5 0.5 0.2 0.1").unwrap();
        assert_eq!(boxes.len(), 1);
        let b = boxes[0].bbox;
        assert_eq!(boxes[0].class_id, ClassId::BUD);
        for (got, want) in [(b.x_min, 0.4), (b.y_min, 0.45), (b.x_max, 0.6), (b.y_max, 0.55)] {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn empty_and_blank_files() {
        assert!(parse_label_file("").unwrap().is_empty());
        assert!(parse_label_file("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn label_errors() {
        assert_eq!(
            parse_label_file("3 0.5 0.5 0.1 0.1").unwrap_err(),
            FormatError::UnknownClass { line: 1, id: 3 }
        );
        assert!(matches!(
            parse_label_file("0 0.5 0.5 0.1 0.1\n0 0.5 0.5 0.1").unwrap_err(),
            FormatError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            parse_label_file("0 0.5 abc 0.1 0.1").unwrap_err(),
            FormatError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            parse_label_file("0 1.5 0.5 0.1 0.1").unwrap_err(),
            FormatError::Range { line: 1, field: "cx", .. }
        ));
        assert!(matches!(
            parse_label_file("0.5 0.5 0.5 0.1 0.1").unwrap_err(),
            FormatError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn corners_are_clamped() {
        let b = parse_label_file("1 0.05 0.5 0.2 0.2").unwrap()[0].bbox;
        assert_eq!(b.x_min, 0.0);
        assert!((b.x_max - 0.15).abs() < 1e-15);
    }

    #[test]
    fn detection_lines() {
        let d = parse_detection_file("1 0.5 0.5 0.2 0.2 0.87").unwrap();
        assert_eq!(d[0].class_id, ClassId::B_FLOWER);
        assert_eq!(d[0].confidence, 0.87);
        assert!(matches!(
            parse_detection_file("1 0.5 0.5 0.2 0.2").unwrap_err(),
            FormatError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            parse_detection_file("0 0.5 0.5 0.1 0.1 1.5").unwrap_err(),
            FormatError::Range { field: "confidence", .. }
        ));
    }
}
