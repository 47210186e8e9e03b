//! Command-line front end: each subcommand reads a JSON config, writes tables
//! (CSV with metadata sidecars, or JSON) into an output directory and prints a
//! JSON summary on stdout.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::output::{Format, Sink};

#[derive(Parser)]
#[command(name = "freelight", version, about = "Light states from energy-modulated free electrons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Recorded in every metadata record; for `optimize` it replaces the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence factors over a grid of coupling and drift.
    Cf(Common),
    /// Photonic state for one to four electrons, or a filter-width scan.
    Emit(Common),
    /// Photon statistics of N electrons over coupling and drift or the coherence-factor plane.
    Stats(Common),
    /// Cat-state fidelity and success probability over coupling and sideband.
    Cat(Common),
    /// Ring-profile synthesis toward a target state, optionally swept.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Use 3000 restarts and 2000 iterations.
        #[arg(long)]
        full_budget: bool,
    },
    /// Wigner function of a target or emitted state.
    Wigner(Common),
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Runs a command against a fresh sink and writes its files only once it succeeds.
fn execute<T: Serialize>(
    common: &Common,
    command: &'static str,
    cfg: &T,
    seed: Option<u64>,
    body: impl FnOnce(&T, &Sink) -> Result<serde_json::Value>,
) -> Result<serde_json::Value> {
    let sink = Sink::new(common.out.clone(), common.format, command, seed, serde_json::to_value(cfg)?);
    let summary = body(cfg, &sink)?;
    sink.commit()?;
    Ok(summary)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Cf(c) => {
            let cfg: config::CfConfig = load(&c.config)?;
            execute(&c, "cf", &cfg, c.seed, commands::cf)
        }
        Command::Emit(c) => {
            let cfg: config::EmitConfig = load(&c.config)?;
            execute(&c, "emit", &cfg, c.seed, commands::emit)
        }
        Command::Stats(c) => {
            let cfg: config::StatsConfig = load(&c.config)?;
            execute(&c, "stats", &cfg, c.seed, commands::stats)
        }
        Command::Cat(c) => {
            let cfg: config::CatConfig = load(&c.config)?;
            execute(&c, "cat", &cfg, c.seed, commands::cat)
        }
        Command::Optimize { common: c, full_budget } => {
            let mut cfg: config::OptimizeConfig = load(&c.config)?;
            if let Some(seed) = c.seed {
                cfg.problem.seed = seed;
            }
            if full_budget {
                cfg.problem = cfg.problem.with_full_budget();
            }
            let seed = Some(cfg.problem.seed);
            execute(&c, "optimize", &cfg, seed, commands::synthesize)
        }
        Command::Wigner(c) => {
            let cfg: config::WignerConfig = load(&c.config)?;
            execute(&c, "wigner", &cfg, c.seed, commands::wigner)
        }
    }
}

fn main() -> Result<()> {
    let summary = run(Cli::parse())?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
