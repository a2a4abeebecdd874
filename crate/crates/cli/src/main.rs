use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sas_cli::commands;
use sas_cli::config::WORKERS_ENV;
use sas_cli::{CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "sas", version, about = "Surrogate-assisted semi-supervised risk prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `replicate`; overrides the config.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fit on CSV data and report intervals for each target.
    Fit,
    /// Write a simulated data set.
    Simulate,
    /// Run the Monte-Carlo study and write summary tables.
    Replicate,
    /// Apply a saved model to new covariate rows.
    Predict,
    /// Cross-validate one nuisance penalty.
    Cv,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.workers.is_some() {
        config.workers = cli.workers;
    }
    if cli.out.is_some() {
        config.out = cli.out;
    }
    match cli.command {
        Command::Fit => commands::cmd_fit(&config).map(|_| ()),
        Command::Simulate => commands::cmd_simulate(&config),
        Command::Replicate => commands::cmd_replicate(&config).map(|_| ()),
        Command::Predict => commands::cmd_predict(&config),
        Command::Cv => commands::cmd_cv(&config).map(|sel| println!("{}", sel.value)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
