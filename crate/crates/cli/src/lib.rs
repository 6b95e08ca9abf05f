//! Batch runner for the pointer-sim pipeline: JSON config in, CSV or JSON out.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical or output failure,
//! 4 tolerance failure.

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::commands::Outcome;
pub use crate::error::CliError;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "POINTER_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "pointer-sim",
    version,
    about = "Pre-measurement, decoherence and pointer-basis experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// JSON config; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Writes the pre-measured joint state and U(tau_pm) as JSON.
    Premeasure(RunArgs),
    /// Writes the phase-damped coherence curve as CSV.
    Decohere(RunArgs),
    /// Compares the truncated-bath evolution with the closed form; CSV.
    Oracle(RunArgs),
    /// Coherence scan over candidate product bases; JSON.
    Scan(RunArgs),
    /// Swap reversal and branch counting; JSON.
    Envariance(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Premeasure(a)
            | Command::Decohere(a)
            | Command::Oracle(a)
            | Command::Scan(a)
            | Command::Envariance(a) => a,
        }
    }
}

fn load_or_default<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C, CliError> {
    match path {
        Some(p) => config::load(p),
        None => Ok(C::default()),
    }
}

/// Runs one subcommand without touching the filesystem for output.
pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let args = command.args();
    let path = args.config.as_deref();
    match command {
        Command::Premeasure(_) => commands::premeasure_cmd(&load_or_default(path)?),
        Command::Decohere(_) => commands::decohere_cmd(&load_or_default(path)?),
        Command::Oracle(_) => {
            let mut cfg: config::OracleConfig = load_or_default(path)?;
            cfg.seed = args.seed.unwrap_or(cfg.seed);
            commands::oracle_cmd(&cfg)
        }
        Command::Scan(_) => {
            let mut cfg: config::ScanConfig = load_or_default(path)?;
            cfg.seed = args.seed.unwrap_or(cfg.seed);
            commands::scan_cmd(&cfg)
        }
        Command::Envariance(_) => {
            let mut cfg: config::EnvarianceConfig = load_or_default(path)?;
            cfg.seed = args.seed.unwrap_or(cfg.seed);
            commands::envariance_cmd(&cfg)
        }
    }
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    match out {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))
        }
        None => Ok(std::io::stdout().lock().write_all(bytes)?),
    }
}

/// Runs a parsed command end to end and returns the process exit code.
/// Nothing is written when the run fails before producing output.
pub fn execute(cli: &Cli) -> i32 {
    let result = thread_count().and_then(|threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
        pool.install(|| run(&cli.command))
    });
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = write_output(cli.command.args().out.as_deref(), &outcome.bytes) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    eprintln!("{}", outcome.summary);
    match outcome.failure {
        Some(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        None => 0,
    }
}
