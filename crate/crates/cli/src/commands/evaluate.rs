use std::path::PathBuf;

use anyhow::{bail, Result};

use msbitrate_core::dataset::read_dataset_csv;
use msbitrate_core::eval::{
    cross_validate, report_to_json, write_report_csv, write_scatter_csv, LogConvention,
};
use msbitrate_core::regression::ModelKind;

use super::{read_file, write_file, EXIT_OK};

#[derive(clap::Args)]
pub struct EvaluateArgs {
    /// Dataset CSV from `join`
    #[arg(long)]
    pub dataset: PathBuf,

    /// Model spec to cross-validate: polynomial|vca|ms|ms-vca
    #[arg(long)]
    pub model: ModelKind,

    /// Encoder preset to evaluate; rows of other presets are ignored
    #[arg(long)]
    pub preset: u32,

    /// Seed for fold shuffling and forest fitting
    #[arg(long)]
    pub seed: u64,

    /// Log scale for the metrics: ln-bits|ln-bpp
    #[arg(long, default_value = "ln-bits")]
    pub log_convention: LogConvention,

    /// Output report JSON
    #[arg(long)]
    pub report: PathBuf,

    /// Optional flat one-row CSV form of the report
    #[arg(long)]
    pub report_csv: Option<PathBuf>,

    /// Optional scatter CSV of pooled test predictions
    #[arg(long)]
    pub scatter: Option<PathBuf>,

    /// Worker threads for tree fitting
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

pub fn run(args: EvaluateArgs) -> Result<i32> {
    let rows = read_dataset_csv(&read_file(&args.dataset)?)?;
    let rows: Vec<_> = rows.into_iter().filter(|r| r.preset == args.preset).collect();
    if rows.is_empty() {
        bail!("dataset has no rows for preset {}", args.preset);
    }

    let pool = super::build_pool(args.threads)?;
    let outcome =
        pool.install(|| cross_validate(&rows, args.model, args.seed, args.log_convention))?;

    let mut json = report_to_json(&outcome.report);
    json.push('\n');
    write_file(&args.report, json.as_bytes())?;

    if let Some(path) = &args.report_csv {
        let mut bytes = Vec::new();
        write_report_csv(&mut bytes, &outcome.report)?;
        write_file(path, &bytes)?;
    }
    if let Some(path) = &args.scatter {
        let mut bytes = Vec::new();
        write_scatter_csv(&mut bytes, &outcome.scatter)?;
        write_file(path, &bytes)?;
    }

    let pcc = outcome
        .report
        .pcc
        .map(|v| format!("{v:.4}"))
        .unwrap_or_else(|| "undefined".into());
    eprintln!(
        "{} preset {}: mape {:.4} pcc {} over {} rows ({} outliers) -> {}",
        outcome.report.model,
        outcome.report.preset,
        outcome.report.mape,
        pcc,
        outcome.report.n_rows,
        outcome.report.outlier_count,
        args.report.display()
    );
    Ok(EXIT_OK)
}
