use clap::ArgMatches;

use florimeter_core::annotio::{count_detections, parse_detection_file, write_counts_csv};
use florimeter_core::geom::nms;

use super::eval::read_dir_with;
use crate::args::CountArgs;
use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult, Context};
use crate::fsio;

pub const COUNTS_FILE: &str = "counts.csv";

pub fn run(_a: &CountArgs, m: &ArgMatches, mut cfg: RunConfig) -> CliResult<()> {
    config::apply_path(m, "detections", &mut cfg.paths.detections);
    config::apply_path(m, "out", &mut cfg.paths.out);
    config::apply(m, "conf", &mut cfg.count.conf);
    config::apply(m, "nms_iou", &mut cfg.count.nms_iou);
    if config::given(m, "no_nms") {
        cfg.count.nms = false;
    }
    let dir = config::require(&cfg.paths.detections, "detections", "detections")?;
    let out = config::require(&cfg.paths.out, "out", "out")?;
    let c = &cfg.count;
    if !(0.0..=1.0).contains(&c.conf) {
        return Err(CliError::invalid(format!("--conf {} is outside [0, 1]", c.conf)));
    }
    if !(c.nms_iou > 0.0 && c.nms_iou <= 1.0) {
        return Err(CliError::invalid(format!("--nms-iou {} is outside (0, 1]", c.nms_iou)));
    }

    let (conf, nms_iou, use_nms) = (c.conf, c.nms_iou, c.nms);
    let rows: Vec<_> = read_dir_with(&dir, |text| {
        let dets = parse_detection_file(text)?;
        Ok(if use_nms { nms(&dets, nms_iou, true) } else { dets })
    })?
    .into_iter()
    .map(|(id, dets)| count_detections(&id, &dets, conf))
    .collect();

    let csv = write_counts_csv(&rows).context("counts")?;
    fsio::ensure_dir(&out)?;
    fsio::write(&out.join(COUNTS_FILE), csv)?;
    cfg.echo(&out)?;
    println!("counted {} images", rows.len());
    Ok(())
}
