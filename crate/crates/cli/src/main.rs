mod args;
mod commands;
mod config;
mod error;
mod fsio;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use config::RunConfig;
use error::{CliError, CliResult};

fn run() -> CliResult<()> {
    let matches = Cli::command().get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let (_, sub) = matches.subcommand().expect("subcommand is required");

    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if config::given(&matches, "seed") || config::given(sub, "seed") {
        cfg.seed = cli.seed;
    }
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::invalid(format!("--jobs {}: {e}", cli.jobs)))?;
    }

    match &cli.command {
        Command::Eval(a) => commands::eval::run(a, sub, cfg),
        Command::Count(a) => commands::count::run(a, sub, cfg),
        Command::BuildStageDs(a) => commands::stage::build(a, sub, cfg),
        Command::TrainTfsc(a) => commands::stage::train(a, sub, cfg),
        Command::PredictStage(a) => commands::stage::predict(a, sub, cfg),
        Command::Dynamics(a) => commands::dynamics::run(a, sub, cfg),
        Command::Gradcheck(_) => commands::gradcheck::run(sub, cfg),
        Command::SynthStages(a) => commands::stage::synth(a, cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
