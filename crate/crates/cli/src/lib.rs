//! Command-line harness: certification runs, expansion and eigenform dumps,
//! sign tables, harmonic-weight checks and detector reports.
//!
//! Exit codes: 0 every property held, 1 some property failed, 2 bad usage or
//! configuration, 3 an internal invariant broke.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use config::{Format, RunArgs, RunConfig};
pub use error::{CliError, CliResult, ExitStatus};

#[derive(Debug, Parser)]
#[command(name = "heckesign", version, about = "Sign changes of Hecke eigenvalues at desk scale")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the peak polynomial over the (L, delta) matrix.
    #[command(name = "verify-lemma21")]
    VerifyLemma21(RunArgs),
    /// Dump Fourier and Chebyshev coefficients of g.
    Expand(RunArgs),
    /// Dump normalised Hecke eigenvalues at primes.
    Eigen(RunArgs),
    /// Tabulate the least negative eigenvalue n_f and least negative prime p_f.
    #[command(name = "nf-table")]
    NfTable(RunArgs),
    /// Harmonic weights, held-out averages and the two routes to the weight.
    #[command(name = "petersson-check")]
    PeterssonCheck(RunArgs),
    /// Evaluate the detector, the set A and the expansion identity.
    #[command(name = "detector-run")]
    DetectorRun(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::VerifyLemma21(a)
            | Command::Expand(a)
            | Command::Eigen(a)
            | Command::NfTable(a)
            | Command::PeterssonCheck(a)
            | Command::DetectorRun(a) => a,
        }
    }
}

pub fn execute(command: &Command) -> CliResult<ExitStatus> {
    let cfg = RunConfig::resolve(command.args())?;
    match command {
        Command::VerifyLemma21(_) => commands::certify_matrix(&cfg),
        Command::Expand(_) => commands::expand(&cfg),
        Command::Eigen(_) => commands::eigen(&cfg),
        Command::NfTable(_) => commands::nf_table(&cfg),
        Command::PeterssonCheck(_) => commands::petersson_check(&cfg),
        Command::DetectorRun(_) => commands::detector_run(&cfg),
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage.code() } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.status().code()
        }
    }
}
