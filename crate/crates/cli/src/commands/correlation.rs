use std::path::PathBuf;

use anyhow::{bail, Result};

use msbitrate_core::dataset::read_dataset_csv;
use msbitrate_core::eval::{correlation_report, write_correlation_csv};

use super::{read_file, write_file, EXIT_OK};

#[derive(clap::Args)]
pub struct CorrelationArgs {
    /// Dataset CSV from `join`
    #[arg(long)]
    pub dataset: PathBuf,

    /// Preset to select
    #[arg(long)]
    pub preset: u32,

    /// CRF to select
    #[arg(long)]
    pub crf: u32,

    /// Output correlation CSV: descriptor,n,pcc
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: CorrelationArgs) -> Result<i32> {
    let rows = read_dataset_csv(&read_file(&args.dataset)?)?;
    let rows: Vec<_> = rows
        .into_iter()
        .filter(|r| r.preset == args.preset && r.crf == args.crf)
        .collect();
    if rows.is_empty() {
        bail!(
            "dataset has no rows for preset {} at crf {}",
            args.preset,
            args.crf
        );
    }
    let report = correlation_report(&rows);
    let mut bytes = Vec::new();
    write_correlation_csv(&mut bytes, &report)?;
    write_file(&args.out, &bytes)?;
    eprintln!(
        "correlations over {} rows (preset {}, crf {}) -> {}",
        rows.len(),
        args.preset,
        args.crf,
        args.out.display()
    );
    Ok(EXIT_OK)
}
