//! `qdchan` — sweep runner for the hybrid optical channels.
//!
//! Subcommands compute joint quadrature densities, MID maps, AMID
//! sweeps, discord sweeps, and the discord-vs-variance relation, and
//! emit machine-readable CSV/JSON.  Exit codes: 0 success, 2 invalid
//! arguments, 3 numerical non-convergence.

mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdchan_core::CoreError;

use crate::config::{CommonArgs, Settings, SweepAxis};

/// CLI failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    exit: u8,
}

impl CliError {
    /// Usage or parameter error (exit 2).
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit: 2,
        }
    }

    /// A convergence certificate failed (exit 3).
    pub fn non_convergence(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit: 3,
        }
    }

    /// Environment failure such as an unwritable output path (exit 1).
    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit: 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CoreError> for CliError {
    fn from(error: CoreError) -> Self {
        let exit = match &error {
            CoreError::QuadratureNonConvergence { .. }
            | CoreError::GridNonConvergence(_)
            | CoreError::OptimizerStagnation(..)
            | CoreError::TruncationInadequate(_)
            | CoreError::SubspaceLeakage(_) => 3,
            CoreError::InvalidParameter(_)
            | CoreError::ModeOutOfRange { .. }
            | CoreError::UnequalModeDims(..) => 2,
            _ => 1,
        };
        Self {
            message: error.to_string(),
            exit,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qdchan",
    version,
    about = "Hybrid optical channels: discord, homodyne statistics, and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Joint quadrature density P(X_A, X_B) on a square grid.
    Jqp {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Measurement-induced disturbance over the detector-phase square.
    MidMap {
        #[command(flatten)]
        common: CommonArgs,
        /// Points per λ axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Phase-minimized MID versus seed amplitude.
    AmidSweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Quantum discord along a swept axis (eta, sigma, or n0).
    DiscordSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Which parameter the grid sweeps.
        #[arg(long, value_enum)]
        sweep: Option<SweepAxis>,
    },
    /// The (quadrature variance, discord) parametric relation.
    QdVsVariance {
        #[command(flatten)]
        common: CommonArgs,
        /// Which parameter the grid sweeps (eta or sigma).
        #[arg(long, value_enum)]
        sweep: Option<SweepAxis>,
    },
    /// Fast internal consistency checks.
    Selftest,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common, resolution, sweep): (&str, &CommonArgs, Option<usize>, Option<SweepAxis>) =
        match &cli.command {
            Command::Jqp { common } => ("jqp", common, None, None),
            Command::MidMap { common, resolution } => ("mid-map", common, *resolution, None),
            Command::AmidSweep { common } => ("amid-sweep", common, None, None),
            Command::DiscordSweep { common, sweep } => ("discord-sweep", common, None, *sweep),
            Command::QdVsVariance { common, sweep } => ("qd-vs-variance", common, None, *sweep),
            Command::Selftest => return commands::cmd_selftest(),
        };
    let settings = Settings::resolve(common, resolution, sweep)?;
    if common.show_config {
        settings.print(name);
        return Ok(());
    }
    match name {
        "jqp" => commands::cmd_jqp(&settings),
        "mid-map" => commands::cmd_mid_map(&settings),
        "amid-sweep" => commands::cmd_amid_sweep(&settings),
        "discord-sweep" => commands::cmd_discord_sweep(&settings),
        "qd-vs-variance" => commands::cmd_qd_vs_variance(&settings),
        _ => unreachable!("every subcommand is dispatched"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("qdchan: {error}");
            ExitCode::from(error.exit)
        }
    }
}
