//! Command-line driver: configuration schema, presets, output files and the
//! subcommands.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(sympcool::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sympcool", version, about = "Sympathetic and evaporative cooling of a trapped Bose-Fermi mixture")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration (see `presets list`).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides `run.snapshot_every`.
    #[arg(long, value_name = "TAU")]
    pub snapshot_every: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium temperature curves and their two approximations.
    Equilibrium(Common),
    /// Two-temperature Maxwell-Boltzmann relaxation.
    Mbmodel(Common),
    /// Full kinetic simulation of one scenario.
    Run(Common),
    /// Cartesian parameter sweep around the `[run]` scenario.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Concurrent runs; overrides `sweep.workers`.
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
    },
    /// Zero-temperature mean-field density profiles.
    Meanfield(Common),
    /// Built-in configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    /// Names and one-line descriptions.
    List,
    /// Prints a preset as a configuration file.
    Show { name: String },
}

fn load(common: &Common) -> Result<Config, CliError> {
    let mut config = match (&common.config, &common.preset) {
        (Some(path), None) => Config::load(path)?,
        (None, Some(name)) => config::preset(name)?,
        _ => return Err(CliError::Config("give exactly one of --config or --preset".into())),
    };
    if let Some(every) = common.snapshot_every {
        match config.run.as_mut() {
            Some(run) => run.snapshot_every = every,
            None => return Err(CliError::Config("--snapshot-every needs a `[run]` table".into())),
        }
    }
    Ok(config)
}

/// Runs one command, returning the summary printed on success.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let summary = match &cli.command {
        Command::Equilibrium(c) => commands::equilibrium(&load(c)?, &c.out)?,
        Command::Mbmodel(c) => commands::mbmodel(&load(c)?, &c.out)?,
        Command::Run(c) => commands::run(&load(c)?, &c.out)?,
        Command::Sweep { common, workers } => commands::sweep(&load(common)?, &common.out, *workers)?,
        Command::Meanfield(c) => commands::meanfield(&load(c)?, &c.out)?,
        Command::Presets { action } => {
            return Ok(match action {
                PresetAction::List => config::PRESETS
                    .iter()
                    .map(|p| format!("{:<18} {}\n", p.name, p.summary))
                    .collect(),
                PresetAction::Show { name } => config::preset(name)?.to_toml(),
            })
        }
    };
    Ok(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")
}
