//! Scenario-file front end for the `robagg` command line tool.
//!
//! A scenario is a JSON document tagged `"version": "robagg-scenario/1"`
//! that declares states, outcomes, agents, acts and a planner, plus the
//! command to run and its parameters. Each command produces a [`Report`]
//! that renders as an aligned table and as RFC-4180 CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

use std::path::PathBuf;

use clap::builder::PossibleValuesParser;
use clap::Parser;

pub use commands::{execute, Options};
pub use error::{CliError, CliResult};
pub use report::{format_g, Cell, Report};
pub use scenario::{Command, Scenario, VERSION};

#[derive(Debug, Clone, Parser)]
#[command(name = "robagg", version, about = "Robust aggregation of beliefs and tastes from scenario files")]
pub struct Cli {
    /// Command to run; must match the scenario's `command` field.
    #[arg(value_parser = PossibleValuesParser::new(Command::ALL.map(Command::name)))]
    pub command: String,
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Write the CSV report here instead of after the table on stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Seed for sampled demonstrations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled hull points for demo-invariance.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Tolerance of the command's built-in check.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Cli {
    pub fn options(&self) -> Options {
        Options { seed: self.seed, samples: self.samples, tol: self.tol }
    }
}

/// Loads the scenario, checks it declares the requested command and runs it.
pub fn run(cli: &Cli) -> CliResult<Report> {
    let scenario = Scenario::load(&cli.scenario)?;
    if scenario.command.name() != cli.command {
        return Err(CliError::CommandMismatch {
            requested: cli.command.clone(),
            declared: scenario.file.command.clone(),
        });
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::schema(format!("--tol must be positive, got {t}")));
        }
    }
    execute(&scenario, &cli.options())
}
