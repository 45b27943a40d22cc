//! `qconstrain simulate|field|check|validate <config.json> [flags]`
//!
//! Exit status: 0 success, 1 invariant failure (`validate`), 2 configuration
//! error, 3 truncated trajectory (`simulate`).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Runtime(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    InvariantFailure,
    Truncated,
}

#[derive(Parser, Debug)]
#[command(name = "qconstrain", version)]
#[command(about = "Metric-projected constrained quantum dynamics on projective Hilbert space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a trajectory and write it as CSV
    Simulate(RunArgs),
    /// Evaluate the constrained field on a grid and write it as CSV
    Field(RunArgs),
    /// Report equivalence diagnostics as JSON
    Check(RunArgs),
    /// Check the geometry identities at seeded points and report as JSON
    Validate(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration
    config: PathBuf,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Integrate without projecting back onto the constraint surface
    #[arg(long)]
    no_projection: bool,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let overrides = Overrides {
            t_end: self.t_end,
            dt: self.dt,
            output: self.output.clone(),
            seed: self.seed,
            no_projection: self.no_projection,
        };
        RunConfig::load(&self.config, &overrides)
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Simulate(args) => commands::simulate(&args.load()?),
        Command::Field(args) => commands::field(&args.load()?),
        Command::Check(args) => commands::check(&args.load()?),
        Command::Validate(args) => commands::validate(&args.load()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::InvariantFailure) => ExitCode::from(1),
        Ok(Outcome::Truncated) => ExitCode::from(3),
        Err(err) => {
            eprintln!("qconstrain: {err}");
            ExitCode::from(2)
        }
    }
}
