//! Command-line driver. Exit codes: 0 pass, 1 verification failure,
//! 2 configuration error, 3 numerical failure.

mod commands;
pub mod dump;
pub mod scenario;

use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;

pub use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::error::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "beltrami", version, about = "Beltrami flow verification, potentials and variational checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Beltrami residuals of the scenario field.
    VerifyBeltrami(Common),
    /// Build a vector potential and check its boundary conditions and fluxes.
    ConstructPotential(Common),
    /// Compare analytic first variations with finite differences.
    CheckVariational {
        #[command(flatten)]
        common: Common,
        /// Overrides the scenario's `variational.num_variations`.
        #[arg(long)]
        num_variations: Option<usize>,
    },
    /// Write the sampled field as BWF1 (and optionally CSV).
    DumpFields {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        csv: bool,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(pass) => {
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("beltrami: {e}");
            e.exit_code()
        }
    }
}
