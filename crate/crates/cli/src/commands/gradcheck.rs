use clap::ArgMatches;
use rayon::prelude::*;

use florimeter_core::neurokernel::{gradcheck_mlp, gradcheck_se, GradCheckReport};
use florimeter_core::tfsc::{NUM_FEATURES, StageLabel};

use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult, Context};

pub fn run(m: &ArgMatches, mut cfg: RunConfig) -> CliResult<()> {
    config::apply(m, "seeds", &mut cfg.gradcheck.seeds);
    config::apply(m, "batch", &mut cfg.gradcheck.batch);
    config::apply(m, "tolerance", &mut cfg.gradcheck.tolerance);
    config::apply_many(m, "hidden", &mut cfg.stage.hidden);
    let g = &cfg.gradcheck;
    if g.seeds == 0 || g.batch == 0 {
        return Err(CliError::invalid("--seeds and --batch must be positive"));
    }

    let mut widths = vec![NUM_FEATURES];
    widths.extend_from_slice(&cfg.stage.hidden);
    widths.push(StageLabel::ALL.len());
    let seeds: Vec<u64> = (0..g.seeds).map(|k| cfg.seed.wrapping_add(k)).collect();
    let mlp: Vec<(u64, GradCheckReport)> = seeds
        .par_iter()
        .map(|&s| Ok((s, gradcheck_mlp(&widths, s, g.batch).context("gradient check")?)))
        .collect::<CliResult<_>>()?;
    let se = gradcheck_se(cfg.seed).context("gradient check")?;

    let mut worst = 0.0f64;
    for (s, r) in &mlp {
        println!(
            "mlp {widths:?} seed {s}: {} params, max rel error {:.3e} ({} refined, {} on a kink)",
            r.checked, r.max_rel_error, r.refined, r.kinks
        );
        worst = worst.max(r.max_rel_error);
    }
    println!("se classifier seed {}: {} params, max rel error {:.3e}", cfg.seed, se.checked, se.max_rel_error);
    worst = worst.max(se.max_rel_error);
    println!("max relative error {worst:.3e} (tolerance {:.1e})", g.tolerance);
    if worst >= g.tolerance {
        return Err(CliError::Check(format!(
            "max relative error {worst:.3e} is not below {:.1e}",
            g.tolerance
        )));
    }
    Ok(())
}
