//! `tinycollapse` — drive collapse simulations, the exact oracle, the
//! verification battery, and the scenario table from the command line.
//!
//! Exit codes are a stable contract: 0 success, 1 verification or
//! tolerance failure, 2 configuration error, 3 resource budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

/// Environment variable supplying the default worker thread count.
pub const THREADS_ENV_VAR: &str = "TINYCOLLAPSE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0} check(s) failed")]
    VerificationFailed(usize),
    #[error("{0} scenario row(s) outside tolerance")]
    ToleranceFailed(usize),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn from_core(e: tinycollapse::Error) -> Self {
        match e {
            tinycollapse::Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::VerificationFailed(_) | CliError::ToleranceFailed(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Comma-separated moment series / scenario table.
    Csv,
    /// Line-delimited JSON records.
    StructuredText,
}

#[derive(Debug, Parser)]
#[command(
    name = "tinycollapse",
    about = "Discrete energy-conserved collapse: simulations, oracles, scenario estimates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Parser)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: $TINYCOLLAPSE_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output format for data files.
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a trajectory ensemble and write its moment statistics.
    Simulate(CommonArgs),
    /// Enumerate the exact event tree for the configured instance.
    Oracle(CommonArgs),
    /// Run the statistical verification battery.
    Verify(CommonArgs),
    /// Evaluate the physical case studies against their reference values.
    Scenarios(CommonArgs),
    /// Render a previously written output directory as plain text.
    Report(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Oracle(args) => commands::oracle(args),
        Command::Verify(args) => commands::verify(args),
        Command::Scenarios(args) => commands::scenarios(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
