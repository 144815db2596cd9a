use clap::ArgMatches;

use florimeter_core::annotio::{parse_counts_csv, parse_manifest_csv};
use florimeter_core::dynamics::{
    aggregate_series, compare_conditions, emit_report, join_counts, stage_timelines, DynamicsReport,
    FloweringSummary,
};
use florimeter_core::tfsc::load_classifier;

use crate::args::DynamicsArgs;
use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult, Context};
use crate::fsio;

pub fn run(a: &DynamicsArgs, m: &ArgMatches, mut cfg: RunConfig) -> CliResult<()> {
    config::apply_path(m, "manifest", &mut cfg.paths.manifest);
    config::apply_path(m, "out", &mut cfg.paths.out);
    config::apply_many(m, "levels", &mut cfg.dynamics.levels);
    if config::given(m, "no_svg") {
        cfg.dynamics.svg = false;
    }
    let manifest_path = config::require(&cfg.paths.manifest, "manifest", "manifest")?;
    let out = config::require(&cfg.paths.out, "out", "out")?;

    let counts = parse_counts_csv(&fsio::read_text(&a.counts)?).context(a.counts.display())?;
    let manifest = parse_manifest_csv(&fsio::read_text(&manifest_path)?).context(manifest_path.display())?;
    let obs = join_counts(&counts, &manifest).map_err(CliError::invalid)?;

    let mut series = aggregate_series(&obs);
    for s in &mut series {
        s.assign_levels(&cfg.dynamics.levels).map_err(CliError::invalid)?;
    }
    let (series, summaries) = match &a.model {
        Some(path) => {
            let clf = load_classifier(&fsio::read_bytes(path)?).context(path.display())?;
            stage_timelines(&series, &clf)
                .context("stage timeline")?
                .into_iter()
                .unzip()
        }
        None => {
            let summaries = series.iter().map(FloweringSummary::from_series).collect();
            (series, summaries)
        }
    };
    let (comparisons, skipped) = compare_conditions(&obs).context("condition comparison")?;
    let report = DynamicsReport {
        level_thresholds: cfg.dynamics.levels.clone(),
        series,
        summaries,
        comparisons,
        skipped_comparisons: skipped,
    };
    let written = emit_report(&report, &out, cfg.dynamics.svg).map_err(|e| CliError::write(&out, e))?;
    cfg.echo(&out)?;
    for c in &report.comparisons {
        println!(
            "{} vs {}: t = {:.4}, df = {:.2}, p = {:.4e} ({})",
            c.a.name, c.b.name, c.t, c.df, c.p, c.test
        );
    }
    for s in &report.skipped_comparisons {
        eprintln!("skipped {s}");
    }
    println!("{} accessions, {} files written", report.series.len(), written.len());
    Ok(())
}
