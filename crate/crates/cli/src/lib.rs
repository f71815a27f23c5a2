//! Library side of the `scarlab` command: configuration, subcommands and the
//! mapping from failures to exit codes.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use scarlab::ScarError;

pub use config::{Command, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

/// Thread count of the worker pool.
pub const THREADS_ENV: &str = "SCARLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "scarlab", version, about = "Scar-tower dynamics: exact checks, correlators, transport and ETH data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Run the invariant suite and write a JSON report.
    Verify(IoArgs),
    /// Compute an autocorrelator grid by ED, MPS or infinite-temperature trace.
    Autocorr(IoArgs),
    /// Demodulate, collapse and fit stored grids.
    Analyze(IoArgs),
    /// Off-diagonal matrix elements between eigenstates and a scar.
    Eth(IoArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; falls back to `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Sub {
    pub fn io(&self) -> (&IoArgs, Command) {
        match self {
            Sub::Verify(a) => (a, Command::Verify),
            Sub::Autocorr(a) => (a, Command::Autocorr),
            Sub::Analyze(a) => (a, Command::Analyze),
            Sub::Eth(a) => (a, Command::Eth),
        }
    }
}

/// Exit status of a failed run.
pub fn exit_code(e: &ScarError) -> i32 {
    match e {
        ScarError::KrylovNonConvergence(_) | ScarError::LocalKrylov { .. } | ScarError::Eigen(_) => EXIT_NONCONVERGENCE,
        ScarError::Analysis(_) => EXIT_VERIFICATION,
        _ => EXIT_CONFIG,
    }
}

/// Outcome of a subcommand that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

pub fn run(cli: &Cli) -> i32 {
    let (io, cmd) = cli.command.io();
    let config = match ExperimentConfig::load(&io.config).and_then(|c| c.validate(cmd).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let Some(out) = io.out.clone().or_else(|| config.out.clone()) else {
        eprintln!("error: no output directory (--out or \"out\" in the config)");
        return EXIT_CONFIG;
    };
    match commands::dispatch(cmd, &config, &out) {
        Ok(Outcome::Passed) => EXIT_OK,
        Ok(Outcome::Failed) => EXIT_VERIFICATION,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
