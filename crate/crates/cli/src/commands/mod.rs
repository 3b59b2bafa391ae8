//! Subcommand dispatch and shared filesystem helpers.
//!
//! Exit codes: 0 on success, 1 on hard failure, 2 when some inputs of a
//! batch failed but the run produced output for the rest.

mod analyze;
mod correlation;
mod evaluate;
mod fit;
mod join;
mod predict;
mod synth;

use std::path::Path;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Parser)]
#[command(
    name = "msbitrate",
    version,
    about = "Motion-search video complexity analysis and encoded-bitrate prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Extract complexity descriptors from Y4M / raw YUV inputs
    Analyze(analyze::AnalyzeArgs),
    /// Join a features CSV with externally measured encoded sizes
    Join(join::JoinArgs),
    /// Fit a bitrate model on a dataset and write it as JSON
    Fit(fit::FitArgs),
    /// Predict bits per pixel for dataset rows with a fitted model
    Predict(predict::PredictArgs),
    /// 5-fold cross-validation of a model spec on a dataset
    Evaluate(evaluate::EvaluateArgs),
    /// Generate the deterministic synthetic corpus with pseudo targets
    Synth(synth::SynthArgs),
    /// Per-descriptor correlation against encoded bits per pixel
    ReportCorrelation(correlation::CorrelationArgs),
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze(args) => analyze::run(args),
        Command::Join(args) => join::run(args),
        Command::Fit(args) => fit::run(args),
        Command::Predict(args) => predict::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Synth(args) => synth::run(args),
        Command::ReportCorrelation(args) => correlation::run(args),
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .context("building thread pool")
}
