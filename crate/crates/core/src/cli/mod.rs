//! Command-line front end: configuration, orchestration and output files.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{GateOutcome, VerifyReport};
pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, Gates, Overrides};
pub use output::CSV_SCHEMA_VERSION;

use crate::kernel::Scaling;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_GATE_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "shotnoise", version, about = "Renewal shot-noise experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write normalized fluctuations Z_t(u) per replication to samples.csv.
    Simulate(CommonArgs),
    /// Run the covariance experiment and deterministic checks; write report.json.
    Verify(CommonArgs),
    /// Draw exact samples of the Gaussian limit on the u-grid.
    LimitSample(CommonArgs),
    /// Tabulate h, H, m and g(t, u) on a log-spaced grid.
    KernelProbe(CommonArgs),
    /// Summarize an existing report.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub replications: Option<u64>,
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "inverse|remark3")]
    pub scaling: Option<Scaling>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            replications: self.replications,
            workers: self.workers,
            out: self.out.clone(),
            scaling: self.scaling,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Config whose output directory holds report.json.
    #[arg(long, value_name = "PATH", required_unless_present = "out")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match commands::dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
