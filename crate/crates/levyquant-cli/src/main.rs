//! `levyquant` — config-driven experiment runner for quantization-entropy
//! measurements of white Lévy noise.

mod config;
mod report;
mod runner;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "levyquant", version, about)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(short, long, global = true, default_value = "experiment.json")]
    config: PathBuf,

    /// Override the config/environment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Output bytes do not depend on
    /// this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure H_{m,n} along a schedule and report residuals against the
    /// closed-form prediction.
    Converge,
    /// Measure two models on a joint schedule; ratio and difference trends.
    Compare,
    /// Encode quantized streams and compare coded rate to measured entropy.
    Codec,
    /// Tabulate the increment density (cf inversion, or the conditional
    /// jump-sum density for Poisson models).
    Density,
    /// Dump raw increments as little-endian f64 plus a JSON sidecar.
    Sample,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("initializing worker pool")?;
    }
    let cfg = ExperimentConfig::load(&cli.config)?;
    let seed = cfg.effective_seed(cli.seed);
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;

    let ok = match cli.command {
        Command::Converge => runner::run_converge(&cfg, seed, &cli.out_dir)?,
        Command::Compare => runner::run_compare(&cfg, seed, &cli.out_dir)?,
        Command::Codec => runner::run_codec(&cfg, seed, &cli.out_dir)?,
        Command::Density => runner::run_density(&cfg, seed, &cli.out_dir)?,
        Command::Sample => runner::run_sample(&cfg, seed, &cli.out_dir)?,
    };
    if !ok {
        std::process::exit(1);
    }
    Ok(())
}
