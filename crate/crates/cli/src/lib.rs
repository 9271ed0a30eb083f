//! Batch runner for the Rydberg link-model experiments: ground-state sweeps,
//! quench dynamics, fit analysis and mapping audits. Each run reads one TOML
//! config and writes a record stream plus CSV tables into its output directory.

pub mod analyze;
pub mod config;
pub mod error;
pub mod ground;
pub mod mapcheck;
pub mod quench;
pub mod records;
pub mod solve;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Backend, RunConfig};
use error::RunError;
use records::Output;

#[derive(Debug, Parser)]
#[command(name = "rydlink", version, about = "Rydberg-array lattice gauge theory runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground states of the vacuum and charged sectors.
    Ground(RunArgs),
    /// Real-time evolution from the rigid string.
    Quench(RunArgs),
    /// Window-ensemble fits over earlier tables.
    Analyze(RunArgs),
    /// Audit the spin to gauge-field map.
    MapCheck(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's backend.
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Continue from checkpoints in the output directory.
    #[arg(long)]
    pub resume: bool,
}

impl RunArgs {
    pub fn load(&self) -> Result<RunConfig, RunError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<(), RunError> {
    match &cli.command {
        Command::Ground(a) => {
            let cfg = a.load()?;
            let mut out = Output::create(&a.out, &cfg, a.resume)?;
            ground::run_ground(&cfg, &mut out, a.resume).map(drop)
        }
        Command::Quench(a) => {
            let cfg = a.load()?;
            let mut out = Output::create(&a.out, &cfg, a.resume)?;
            quench::run_quench(&cfg, &mut out, a.resume).map(drop)
        }
        Command::Analyze(a) => {
            let cfg = a.load()?;
            let mut out = Output::create(&a.out, &cfg, false)?;
            analyze::run_analyze(&cfg, &mut out).map(drop)
        }
        Command::MapCheck(a) => {
            let cfg = a.load()?;
            let mut out = Output::create(&a.out, &cfg, false)?;
            mapcheck::run_map_check(&cfg, &mut out).map(drop)
        }
    }
}
