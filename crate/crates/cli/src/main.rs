//! `dustwalk` command-line entry point.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use config::Overrides;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("tolerance not met: {0}")]
    Tolerance(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "invalid_config",
            CliError::Io(_) => "io",
            CliError::Simulation(_) => "simulation",
            CliError::Tolerance(_) => "tolerance",
            CliError::Failed(_) => "acceptance_failed",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dustwalk", version, about = "Greedy walks on marked Poisson processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// 1D walk under the Palm measure with a point at the origin.
    Simulate1d {
        #[command(flatten)]
        o: Overrides,
        /// Continue a run from its checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Tourist walk in the plane or in a strip.
    Simulate2d {
        #[command(flatten)]
        o: Overrides,
    },
    /// Explorer disc chain.
    Explorer {
        #[command(flatten)]
        o: Overrides,
    },
    /// Gap, renewal and return observables of one walk from a double mark.
    Observables {
        #[command(flatten)]
        o: Overrides,
    },
    /// Tail statistics of the return time to the negative half-line.
    Tails {
        #[command(flatten)]
        o: Overrides,
    },
    /// 2D tourist walk of 10^4 steps.
    Figure2 {
        #[command(flatten)]
        o: Overrides,
    },
    /// 1D walk with p = 0.5 for 4 x 10^4 steps.
    Figure3 {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Runs the acceptance suite; nonzero exit if a gating criterion fails.
    Selftest {
        #[command(flatten)]
        o: Overrides,
        /// Reduced sample sizes; a smoke test, not the acceptance suite.
        #[arg(long)]
        quick: bool,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate1d { o, resume } => commands::simulate1d("simulate1d", &o, resume),
        Command::Figure3 { o, resume } => commands::simulate1d("figure3", &o, resume),
        Command::Simulate2d { o } => commands::simulate2d("simulate2d", &o),
        Command::Figure2 { o } => commands::simulate2d("figure2", &o),
        Command::Explorer { o } => commands::explorer(&o),
        Command::Observables { o } => commands::observables(&o),
        Command::Tails { o } => commands::tails(&o),
        Command::Selftest { o, quick } => commands::selftest(&o, quick),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // help and version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Usage(e.to_string().trim().to_string())),
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
    ExitCode::from(e.exit_code())
}
