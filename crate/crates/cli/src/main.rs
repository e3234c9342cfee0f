//! `frontlab` command-line driver.
//!
//! Every subcommand reads one TOML config, writes its artifacts into the
//! output directory together with a manifest holding the resolved config, and
//! exits with 0 on success, 1 on a domain failure and 2 on a usage or config
//! error. Failures also print a JSON error object on stderr and leave it in
//! `error.json`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "frontlab", version, about = "Travelling fronts of a delayed reaction-diffusion equation")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Seed or front profile CSV used instead of the previous stage's output.
    #[arg(long, global = true, value_name = "PATH")]
    pub seed_profile: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Certify the hypotheses on the birth function and delay.
    Check,
    /// Characteristic roots in a strip.
    Roots,
    /// Heteroclinic connection of the delay equation.
    Backbone,
    /// Travelling front at the configured speed.
    Front,
    /// Reaction-diffusion run started from the front.
    Simulate,
    /// Compare the front with a reaction-diffusion run.
    Validate,
    /// Fronts for a list of speeds.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Roots => "roots",
            Command::Backbone => "backbone",
            Command::Front => "front",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
            Command::Sweep => "sweep",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    commands::run(&cli)
}
