//! Command-line driver: configuration, dispatch and report files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, ValueEnum};
use serde::Serialize;

use latticesir::simulator::Mode;

use config::{ExperimentConfig, Overrides, Subcommand};
use error::CliResult;
use output::{to_json, Outputs};

#[derive(Debug, Parser)]
#[command(name = "latticesir", version, about = "SIR moments, transforms and simulation on a periodic lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for output files and `manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Linear,
    Clamped,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linear => Mode::Linear,
            ModeArg::Clamped => Mode::Clamped,
        }
    }
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Kernel summary and its Fourier symbol on the lattice grid.
    KernelInfo(Common),
    /// First or second moment fields.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
    },
    /// Green function at the origin and an optional return-probability decay fit.
    Green(Common),
    /// Exact event simulation and Monte Carlo moment estimates.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated snapshot times.
        #[arg(long, value_delimiter = ',')]
        snapshot: Option<Vec<f64>>,
    },
    /// Second-moment to squared-mean ratios and their long-time label.
    Intermittency(Common),
    /// Regime labels for the configured frequencies.
    Classify(Common),
    /// Local versus nonlocal spread from a single infected site.
    Figure1(Common),
    /// Regime tables regenerated over a parameter sweep.
    Tables(Common),
}

impl Command {
    fn parts(&self) -> (Subcommand, &Common, Overrides, Option<u8>) {
        match self {
            Command::KernelInfo(c) => (Subcommand::KernelInfo, c, Overrides::default(), None),
            Command::Moments { common, order } => (Subcommand::Moments, common, Overrides::default(), Some(*order)),
            Command::Green(c) => (Subcommand::Green, c, Overrides::default(), None),
            Command::Simulate { common, mode, replicas, seed, snapshot } => (
                Subcommand::Simulate,
                common,
                Overrides { mode: mode.map(Mode::from), replicas: *replicas, seed: *seed, snapshots: snapshot.clone() },
                None,
            ),
            Command::Intermittency(c) => (Subcommand::Intermittency, c, Overrides::default(), None),
            Command::Classify(c) => (Subcommand::Classify, c, Overrides::default(), None),
            Command::Figure1(c) => (Subcommand::Figure1, c, Overrides::default(), None),
            Command::Tables(c) => (Subcommand::Tables, c, Overrides::default(), None),
        }
    }
}

fn report<T: Serialize>(r: CliResult<T>) -> CliResult<Vec<u8>> {
    to_json(&r?)
}

/// Runs one subcommand and returns the JSON report printed on stdout.
pub fn run(cli: &Cli) -> CliResult<Vec<u8>> {
    let start = Instant::now();
    let (sub, common, overrides, order) = cli.command.parts();
    let value = match &common.config {
        Some(path) => config::parse_config(path)?,
        None => serde_json::Value::Object(Default::default()),
    };
    let cfg = ExperimentConfig::from_value(&value, &overrides)?;
    cfg.require(sub)?;
    let mut out = Outputs::new(common.out.clone())?;
    let json = match sub {
        Subcommand::KernelInfo => report(commands::kernel_info(&cfg, &mut out)),
        Subcommand::Moments if order == Some(2) => report(commands::moments_second(&cfg, &mut out)),
        Subcommand::Moments => report(commands::moments_first(&cfg, &mut out)),
        Subcommand::Green => report(commands::green(&cfg, &mut out)),
        Subcommand::Simulate => report(commands::simulate(&cfg, &mut out)),
        Subcommand::Intermittency => report(commands::intermittency(&cfg, &mut out)),
        Subcommand::Classify => report(commands::classify(&cfg, &mut out)),
        Subcommand::Figure1 => report(commands::figure1(&cfg, &mut out)),
        Subcommand::Tables => report(commands::tables(&mut out)),
    }?;
    out.finish(sub.name(), cfg.hash(sub, order), start.elapsed().as_secs_f64())?;
    Ok(json)
}
