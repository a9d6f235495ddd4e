//! `gerber`: evaluate MMSE-based entropy bounds, emit comparison sweeps as
//! CSV, and run the invariant suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod bound;
mod figure;
mod format;
mod pmf;
mod validate;

#[derive(Debug, Parser)]
#[command(name = "gerber", version, about, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a single bound and echo its inputs.
    Bound(bound::BoundArgs),
    /// Write the data behind one comparison plot as CSV.
    Figure(figure::FigureArgs),
    /// Run invariant suites against the exact and Monte Carlo oracles.
    Validate(validate::ValidateArgs),
    /// Exact MMSE quantities of a pmf read from a text file.
    PmfMmse(pmf::PmfArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gerber_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{failed} invariant(s) failed")]
    Validation { failed: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Write `text` to standard output; a closed pipe is reported, not a panic.
pub fn emit(text: &str) -> CliResult<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io("<stdout>", e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bound(args) => bound::run(&args),
        Command::Figure(args) => figure::run(&args),
        Command::Validate(args) => validate::run(&args),
        Command::PmfMmse(args) => pmf::run(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
