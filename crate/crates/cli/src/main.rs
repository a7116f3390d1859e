//! `osgoodlab` batch front-end.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 inconclusive
//! Osgood classification, 3 lemma or certificate failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Outcome};
use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "osgoodlab",
    version,
    about = "Osgood classifier, semigroup lemma checks and non-uniqueness certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the Osgood integral of the configured nonlinearity.
    Osgood(CommonArgs),
    /// Check kernel ordering and estimate kappa.
    ValidateLemmas(CommonArgs),
    /// Build a non-uniqueness certificate, or report that uniqueness holds.
    Certify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `run.out` (default `out`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `problem.grid_n`.
    #[arg(long, value_name = "N")]
    grid_n: Option<usize>,
    /// Overrides `run.dt`.
    #[arg(long, value_name = "X")]
    dt: Option<f64>,
}

type CommandFn = fn(&RunConfig, &std::path::Path) -> Result<Outcome, CliError>;

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("OSGOODLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        ConfigError::new(
            "OSGOODLAB_THREADS",
            format!("expected a positive integer, got {raw:?}"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::new("OSGOODLAB_THREADS", e.to_string()))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    let (args, cmd): (&CommonArgs, CommandFn) = match &cli.command {
        Command::Osgood(a) => (a, commands::cmd_osgood),
        Command::ValidateLemmas(a) => (a, commands::cmd_validate_lemmas),
        Command::Certify(a) => (a, commands::cmd_certify),
    };
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(n) = args.grid_n {
        cfg.set_grid_n(n)?;
    }
    if let Some(dt) = args.dt {
        cfg.set_dt(dt)?;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.run.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    cmd(&cfg, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match run(Cli::parse()) {
        Ok(Outcome::Failure(msg)) => {
            eprintln!("FAIL: {msg}");
            3
        }
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
