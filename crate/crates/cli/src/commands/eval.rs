use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use rayon::prelude::*;
use serde::Serialize;

use florimeter_core::annotio::{parse_detection_file, parse_label_file, parse_manifest_csv};
use florimeter_core::evalkit::{evaluate_dataset, evaluate_grouped, pair_images, EvalConfig, EvalImage};

use crate::args::EvalArgs;
use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult, Context};
use crate::fsio;

pub const REPORT_FILE: &str = "eval_report.json";
pub const TABLE_FILE: &str = "eval_table.txt";

/// Parses every `*.txt` file of `dir` in parallel.
pub fn read_dir_with<T, F>(dir: &Path, parse: F) -> CliResult<BTreeMap<String, T>>
where
    T: Send,
    F: Fn(&str) -> Result<T, florimeter_core::annotio::FormatError> + Sync,
{
    let files: Vec<(String, PathBuf)> = fsio::txt_files(dir)?.into_iter().collect();
    files
        .par_iter()
        .map(|(id, path)| {
            let text = fsio::read_text(path)?;
            let parsed = parse(&text).context(path.display())?;
            Ok((id.clone(), parsed))
        })
        .collect()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn run(_a: &EvalArgs, m: &ArgMatches, mut cfg: RunConfig) -> CliResult<()> {
    config::apply_path(m, "labels", &mut cfg.paths.labels);
    config::apply_path(m, "detections", &mut cfg.paths.detections);
    config::apply_path(m, "manifest", &mut cfg.paths.manifest);
    config::apply_path(m, "out", &mut cfg.paths.out);
    config::apply(m, "conf", &mut cfg.eval.conf);
    config::apply(m, "pr_iou", &mut cfg.eval.pr_iou);
    config::apply_many(m, "iou", &mut cfg.eval.iou);
    config::apply(m, "per_dataset", &mut cfg.eval.per_dataset);
    config::apply(m, "group_by", &mut cfg.eval.group_by);

    let labels_dir = config::require(&cfg.paths.labels, "labels", "labels")?;
    let dets_dir = config::require(&cfg.paths.detections, "detections", "detections")?;
    let out = config::require(&cfg.paths.out, "out", "out")?;
    let eval_cfg = EvalConfig {
        conf_floor: cfg.eval.conf,
        pr_iou: cfg.eval.pr_iou,
        ap_thresholds: cfg.eval.iou.clone(),
    };
    eval_cfg.validate().context("invalid evaluation settings")?;

    let labels = read_dir_with(&labels_dir, parse_label_file)?;
    let dets = read_dir_with(&dets_dir, parse_detection_file)?;
    let images = pair_images(labels, dets).map_err(CliError::invalid)?;

    let (json, table) = if cfg.eval.per_dataset {
        let manifest_path = config::require(&cfg.paths.manifest, "manifest", "manifest")?;
        let groups = group_images(images, &manifest_path, &cfg.eval.group_by)?;
        let report = evaluate_grouped(&groups, &eval_cfg).context("evaluation")?;
        let mut table = format!("== overall ({} images)\n{}", report.overall.images, report.overall.to_table());
        for (name, r) in &report.per_dataset {
            table.push_str(&format!("\n== {name} ({} images)\n{}", r.images, r.to_table()));
        }
        for (name, why) in &report.skipped {
            table.push_str(&format!("\n== {name}: skipped, {why}\n"));
        }
        (to_json(&report), table)
    } else {
        let report = evaluate_dataset(&images, &eval_cfg).context("evaluation")?;
        (to_json(&report), report.to_table())
    };

    fsio::ensure_dir(&out)?;
    fsio::write(&out.join(REPORT_FILE), json)?;
    fsio::write(&out.join(TABLE_FILE), &table)?;
    cfg.echo(&out)?;
    print!("{table}");
    Ok(())
}

fn group_images(images: Vec<EvalImage>, manifest: &Path, by: &str) -> CliResult<BTreeMap<String, Vec<EvalImage>>> {
    let rows = parse_manifest_csv(&fsio::read_text(manifest)?).context(manifest.display())?;
    let key: BTreeMap<&str, String> = rows
        .iter()
        .map(|r| {
            let k = match by {
                "condition" => r.condition.to_string(),
                "date" => r.date.to_string(),
                _ => r.accession.clone(),
            };
            (r.image_id.as_str(), k)
        })
        .collect();
    let missing: Vec<&str> = images
        .iter()
        .map(|i| i.image_id.as_str())
        .filter(|id| !key.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::invalid(format!("images missing from the manifest: {}", missing.join(", "))));
    }
    let mut groups: BTreeMap<String, Vec<EvalImage>> = BTreeMap::new();
    for img in images {
        groups.entry(key[img.image_id.as_str()].clone()).or_default().push(img);
    }
    Ok(groups)
}
