//! Batch workflows over the `aesthete` library: modality generation,
//! synthetic data, training, evaluation, analyses and hyperparameter sweeps.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod io;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "aesthete", version, about = "Modality-decomposed aesthetic assessment")]
pub struct Cli {
    /// TOML run configuration. Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Global seed, overriding `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, overriding `workers`.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Apply modality transforms to images listed in a manifest or directory.
    Modality,
    /// Write a synthetic labeled dataset.
    Synth,
    /// Train the configured stages and save the checkpoint.
    Train,
    /// Evaluate a checkpoint on one split.
    Eval,
    /// Score bins, histograms, modality preference and covariances.
    Analyze,
    /// Grid search over training hyperparameters.
    Sweep,
}

pub fn run(cli: &Cli) -> Result<()> {
    let overrides = Overrides { out: cli.out.clone(), seed: cli.seed, workers: cli.workers };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    pool.install(|| match cli.command {
        Command::Modality => commands::modality::run(&cfg),
        Command::Synth => commands::synth::run(&cfg),
        Command::Train => commands::train::run(cfg.clone()),
        Command::Eval => commands::eval::run(&cfg),
        Command::Analyze => commands::analyze::run(&cfg),
        Command::Sweep => commands::sweep::run(&cfg),
    })
}
