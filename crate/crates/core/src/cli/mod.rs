//! Command-line front end: `simulate`, `verify`, `reconstruct`, `frequencies`.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage or config error, 3 numerical
//! rejection.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{summary_path, write_atomic, Check, CliError, RunOptions, Suite, VerifyReport};
pub use config::{config_hash, load_config, parse_config, Instance, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "eps", version, about = "Nonholonomic geodesic flows on compact Lie groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; reports go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl From<&Common> for RunOptions {
    fn from(c: &Common) -> Self {
        RunOptions {
            config: c.config.clone(),
            out: c.out.clone(),
            seed: c.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the configured instance; writes a trajectory CSV and a summary JSON.
    Simulate(Common),
    /// Run a verification suite and print its JSON verdict.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct the group trajectory from a simulated trajectory CSV.
    Reconstruct {
        trajectory: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Torus frequencies of a symmetric-pair instance.
    Frequencies {
        #[command(flatten)]
        common: Common,
        /// Compare against rotation numbers of an integrated trajectory.
        #[arg(long)]
        crosscheck: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
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
    let outcome = match &cli.command {
        Command::Simulate(c) => commands::simulate(&c.into()).map(|()| true),
        Command::Verify { suite, common } => commands::verify(*suite, &common.into()),
        Command::Reconstruct { trajectory, common } => commands::reconstruct(trajectory, &common.into()).map(|()| true),
        Command::Frequencies { common, crosscheck } => commands::frequencies(&common.into(), *crosscheck),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
