#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use opgrowth::Precision;

use config::RunConfig;
use output::Run;

#[derive(Parser)]
#[command(name = "opgrowth", version, about = "Operator growth: Lanczos coefficients, Krylov complexity and moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML, or a manifest.json from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Arithmetic for inner products and moment recursions.
    #[arg(long, global = true, value_enum)]
    precision: Option<PrecisionArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the model and write its spectrum and operator.
    Model,
    /// Lanczos coefficients and the growth report.
    Lanczos,
    /// Krylov complexity and the autocorrelation function.
    Dynamics,
    /// Empirical structure function and its decay class.
    Structure,
    /// Growth reports over a parameter grid.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Model => "model",
            Command::Lanczos => "lanczos",
            Command::Dynamics => "dynamics",
            Command::Structure => "structure",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum PrecisionArg {
    Double,
    Extended,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let Some(path) = &cli.config else {
        bail!("--config is required");
    };
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.precision {
        cfg.lanczos.precision = match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        };
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    set_jobs(cli.jobs)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut run = Run::new(&dir)?;
    match cli.command {
        Command::Model => commands::model(&cfg, &mut run)?,
        Command::Lanczos => commands::lanczos_cmd(&cfg, &mut run)?,
        Command::Dynamics => commands::dynamics(&cfg, &mut run)?,
        Command::Structure => commands::structure(&cfg, &mut run)?,
        Command::Sweep => commands::sweep(&cfg, &mut run)?,
    }
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    run.finish(cli.command.name(), &cfg)
}

#[cfg(feature = "parallel")]
fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if jobs.is_some_and(|n| n > 1) {
        eprintln!("warning: built without the parallel feature; --jobs ignored");
    }
    Ok(())
}
