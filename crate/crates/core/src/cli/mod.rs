//! Command-line front end: `price`, `curve`, `verify-sched` and `bench`.
//!
//! Exit codes: 0 on success, 1 when a verification or pricing step fails,
//! 2 for usage and configuration errors.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    cmd_bench, cmd_curve, cmd_price, cmd_verify_scheduler, median, price_once, BenchRecord, Priced, Verdict,
};
pub use config::{hardware_threads, ConfigError, ConfigFile, Flags, Mode, Output, PayoffKind, RunConfig};

use crate::model::ModelError;
use crate::seq::PricingError;

#[derive(Debug, Parser)]
#[command(name = "bidask", version, about = "Ask and bid prices of American options on a binomial lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one option.
    Price(Flags),
    /// Ask and bid over a range of initial stock prices and cost rates.
    Curve(Flags),
    /// Count worker 0's nodes and dry-run the scheduler for each (N, p).
    #[command(name = "verify-sched")]
    VerifySched(Flags),
    /// Time the sequential pricer and the parallel engine.
    Bench(Flags),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Csv(#[from] csv::Error),
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(ConfigError::Model(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Pricing(PricingError::Model(_) | PricingError::Arbitrage(_)) => 2,
            CliError::Pricing(PricingError::Algebra { .. }) | CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<Verdict, CliError> {
    match command {
        Command::Price(flags) => cmd_price(&RunConfig::resolve(flags)?, out, err),
        Command::Curve(flags) => cmd_curve(&RunConfig::resolve(flags)?, out),
        Command::VerifySched(flags) => cmd_verify_scheduler(&RunConfig::resolve(flags)?, out, err),
        Command::Bench(flags) => cmd_bench(&RunConfig::resolve(flags)?, out, err),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(Verdict::Pass) => 0,
        Ok(Verdict::Fail) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
