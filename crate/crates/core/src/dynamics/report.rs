//! Dynamics report: canonical JSON, CSV tables and SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::series::{AccessionSeries, CountObservation, FloweringSummary};
use super::stats::{compare_named, GroupComparison};
use super::DynamicsError;
use crate::annotio::Condition;
use crate::stage::StageLabel;

pub const REPORT_JSON: &str = "dynamics_report.json";
pub const SERIES_CSV: &str = "series.csv";
pub const SUMMARY_CSV: &str = "summaries.csv";
pub const COMPARISON_CSV: &str = "comparisons.csv";

/// Condition pairs compared on per-image total flower counts.
pub const CONDITION_PAIRS: [(Condition, Condition); 2] = [
    (Condition::Backlight, Condition::Frontlight),
    (Condition::Pruned, Condition::Unpruned),
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub level_thresholds: Vec<f64>,
    pub series: Vec<AccessionSeries>,
    pub summaries: Vec<FloweringSummary>,
    pub comparisons: Vec<GroupComparison>,
    /// Condition pairs that could not be tested, with the reason.
    pub skipped_comparisons: Vec<String>,
}

/// Welch tests of per-image totals for each condition pair that has at
/// least two images on both sides.
pub fn compare_conditions(obs: &[CountObservation]) -> Result<(Vec<GroupComparison>, Vec<String>), DynamicsError> {
    let mut done = Vec::new();
    let mut skipped = Vec::new();
    for (ca, cb) in CONDITION_PAIRS {
        let totals = |c: Condition| -> Vec<f64> { obs.iter().filter(|o| o.condition == c).map(|o| o.total()).collect() };
        let (a, b) = (totals(ca), totals(cb));
        if a.len() < 2 || b.len() < 2 {
            skipped.push(format!("{ca} vs {cb}: {} and {} images, need at least 2 each", a.len(), b.len()));
            continue;
        }
        done.push(compare_named(ca.as_str(), &a, cb.as_str(), &b)?);
    }
    Ok((done, skipped))
}

/// Pretty JSON with object keys in sorted order, newline terminated.
pub fn report_json(report: &DynamicsReport) -> String {
    let value = serde_json::to_value(report).expect("report serializes");
    canonical_json(&value)
}

pub fn canonical_json(value: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn series_csv(series: &[AccessionSeries]) -> String {
    let mut out = String::from("accession,date,bud,b_flower,w_flower,n,total,level,stage\n");
    for s in series {
        for p in &s.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.accession,
                p.date,
                p.bud,
                p.b_flower,
                p.w_flower,
                p.n,
                p.total(),
                opt(p.level),
                opt(p.stage)
            );
        }
    }
    out
}

pub fn summary_csv(summaries: &[FloweringSummary]) -> String {
    let mut out = String::from("accession,onset,peak_start,peak_end,terminal\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.accession,
            opt(s.onset),
            opt(s.peak_start),
            opt(s.peak_end),
            opt(s.terminal)
        );
    }
    out
}

pub fn comparison_csv(comparisons: &[GroupComparison]) -> String {
    let mut out = String::from("test,group_a,group_b,n_a,n_b,mean_a,mean_b,var_a,var_b,t,df,p\n");
    for c in comparisons {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.test, c.a.name, c.b.name, c.a.n, c.b.n, c.a.mean, c.b.mean, c.a.variance, c.b.variance, c.t, c.df, c.p
        );
    }
    out
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 360.0;
const MARGIN: f64 = 48.0;
const LINE_COLORS: [(&str, &str); 3] = [("bud", "#2b8a3e"), ("b_flower", "#e8590c"), ("w_flower", "#6741d9")];
const STAGE_COLORS: [&str; 5] = ["#d3f9d8", "#fff3bf", "#ffe8cc", "#ffd8a8", "#e9ecef"];

/// Line chart of the three mean counts over time, one polyline each, with
/// predicted stages shaded behind them.
pub fn series_svg(series: &AccessionSeries) -> String {
    let pts = &series.points;
    let days: Vec<f64> = pts.iter().map(|p| day_number(p.date)).collect();
    let (d0, d1) = match (days.first(), days.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let ymax = pts
        .iter()
        .flat_map(|p| p.means())
        .fold(1.0f64, f64::max);
    let x = |d: f64| MARGIN + (d - d0) / (d1 - d0) * (SVG_W - 2.0 * MARGIN);
    let y = |v: f64| SVG_H - MARGIN - v / ymax * (SVG_H - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", xml_escape(&series.accession));
    for (i, p) in pts.iter().enumerate() {
        let Some(stage) = p.stage else { continue };
        let left = if i == 0 { x(days[0]) } else { (x(days[i - 1]) + x(days[i])) / 2.0 };
        let right = if i + 1 == pts.len() { x(days[i]) } else { (x(days[i]) + x(days[i + 1])) / 2.0 };
        let _ = writeln!(
            out,
            r#"<rect class="stage {stage}" x="{left:.2}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            (right - left).max(1.0),
            SVG_H - 2.0 * MARGIN,
            STAGE_COLORS[stage.index()]
        );
    }
    let _ = writeln!(
        out,
        r##"<g stroke="#495057"><line x1="{MARGIN}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{0:.2}"/></g>"##,
        SVG_H - MARGIN,
        SVG_W - MARGIN
    );
    for (k, (name, color)) in LINE_COLORS.iter().enumerate() {
        let coords: Vec<String> = pts
            .iter()
            .zip(&days)
            .map(|(p, &d)| format!("{:.2},{:.2}", x(d), y(p.means()[k])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
    }
    if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="{:.2}" font-size="12">{}</text><text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            SVG_H - 16.0,
            first.date,
            SVG_W - MARGIN,
            SVG_H - 16.0,
            last.date
        );
    }
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24" font-size="12">max {ymax:.1}</text>"#);
    out.push_str("</svg>\n");
    out
}

fn day_number(d: NaiveDate) -> f64 {
    (d - NaiveDate::default()).num_days() as f64
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn file_stem(accession: &str) -> String {
    accession
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes the JSON report and CSV tables into `dir`, plus one SVG per
/// accession when `svg` is set. Returns the written paths.
pub fn emit_report(report: &DynamicsReport, dir: &Path, svg: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put(REPORT_JSON.into(), report_json(report))?;
    put(SERIES_CSV.into(), series_csv(&report.series))?;
    put(SUMMARY_CSV.into(), summary_csv(&report.summaries))?;
    put(COMPARISON_CSV.into(), comparison_csv(&report.comparisons))?;
    if svg {
        for s in &report.series {
            put(format!("series_{}.svg", file_stem(&s.accession)), series_svg(s))?;
        }
    }
    Ok(written)
}

/// Stage colour legend used by the charts.
pub fn stage_color(stage: StageLabel) -> &'static str {
    STAGE_COLORS[stage.index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{aggregate_series, compare_groups, SeriesPoint};

    fn one_series() -> AccessionSeries {
        AccessionSeries {
            accession: "TA01".into(),
            points: (0..4)
                .map(|i| SeriesPoint {
                    date: NaiveDate::from_ymd_opt(2023, 11, 1 + i).unwrap(),
                    bud: 10.0 - i as f64,
                    b_flower: i as f64 * 2.0,
                    w_flower: i as f64,
                    n: 3,
                    stage: StageLabel::from_index(i as usize),
                    level: Some(1),
                })
                .collect(),
        }
    }

    #[test]
    fn svg_has_three_polylines() {
        let svg = series_svg(&one_series());
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("<rect class=\"stage").count(), 4);
    }

    #[test]
    fn json_is_canonical() {
        let report = DynamicsReport {
            level_thresholds: vec![5.0, 20.0, 50.0],
            series: vec![one_series()],
            summaries: vec![FloweringSummary::from_series(&one_series())],
            comparisons: vec![compare_groups(&[1.0, 2.0, 4.0], &[3.0, 3.5]).unwrap()],
            skipped_comparisons: vec!["x".into()],
        };
        let text = report_json(&report);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(canonical_json(&value), text);
        let typed: DynamicsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report_json(&typed), text);
    }

    #[test]
    fn empty_report_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&DynamicsReport::default(), dir.path(), true).unwrap();
        assert_eq!(files.len(), 4);
        let series = fs::read_to_string(dir.path().join(SERIES_CSV)).unwrap();
        assert_eq!(series.lines().count(), 1);
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(REPORT_JSON)).unwrap()).unwrap();
        assert!(json["series"].as_array().unwrap().is_empty());
        assert!(aggregate_series(&[]).is_empty());
    }
}
