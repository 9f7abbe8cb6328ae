//! Batch front-end for the polar-tails library.
//!
//! Five subcommands: `tail-table` and `cond-cdf` tabulate exact quantities
//! against their asymptotic forms, `simulate` draws reproducible samples,
//! `estimate` fits tail parameters from a CSV sample, and `validate` runs a
//! built-in consistency suite. Experiments are described by a flat
//! `key = value` config file; outputs are CSV with a manifest comment line.
//!
//! Exit codes: 0 on success, 2 for configuration or data errors, 3 for
//! numeric failures (including a failed `validate` run).

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "polar-tails", version)]
#[command(about = "Tail tables, simulation, and estimation for bivariate polar models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the exact marginal tail against its asymptotic forms over u_grid
    TailTable(RunArgs),
    /// Tabulate the exact conditional CDF against its limit forms over u_grid x y_grid
    CondCdf(RunArgs),
    /// Draw a reproducible sample from the configured model and write it as CSV
    Simulate(RunArgs),
    /// Estimate tail parameters from a CSV sample and write a key=value report
    Estimate(RunArgs),
    /// Run built-in consistency checks, plus model checks when a config is given
    Validate(RunArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Experiment configuration file (flat `key = value`, `#` comments)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for commands that draw samples
    #[arg(long)]
    seed: Option<u64>,
}

/// Failures split by exit code: configuration and data problems exit 2,
/// numeric problems exit 3.
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numeric(msg) => f.write_str(msg),
        }
    }
}

impl From<polar_tails::Error> for CliError {
    fn from(e: polar_tails::Error) -> Self {
        use polar_tails::Error;
        match e {
            Error::InvalidParameter(_) | Error::Domain(_) | Error::InsufficientData(_) => {
                CliError::Config(e.to_string())
            }
            Error::QuadratureNoConvergence { .. } | Error::Numeric(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    match cli.command {
        Command::TailTable(args) => commands::tail_table(&args),
        Command::CondCdf(args) => commands::cond_cdf(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Estimate(args) => commands::estimate(&args),
        Command::Validate(args) => commands::validate(&args),
    }
}

/// `POLAR_TAILS_THREADS` caps the worker count; 0 or unset means automatic.
fn init_thread_pool() -> Result<(), CliError> {
    let raw = match std::env::var("POLAR_TAILS_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::Config(format!("POLAR_TAILS_THREADS: {e}"))),
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Config(format!(
            "POLAR_TAILS_THREADS must be a non-negative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool setup failed: {e}")))?;
    }
    Ok(())
}
