use std::path::PathBuf;

use anyhow::{bail, Result};

use msbitrate_core::dataset::{read_dataset_csv, write_predictions_csv};
use msbitrate_core::regression::model_from_json;

use super::{read_file, write_file, EXIT_OK};

#[derive(clap::Args)]
pub struct PredictArgs {
    /// Dataset CSV with feature columns (targets are used only for the
    /// relative_error column)
    #[arg(long)]
    pub dataset: PathBuf,

    /// Fitted model JSON from `fit`
    #[arg(long)]
    pub model: PathBuf,

    /// Output predictions CSV
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: PredictArgs) -> Result<i32> {
    let rows = read_dataset_csv(&read_file(&args.dataset)?)?;
    let model = model_from_json(&read_file(&args.model)?)?;

    if let Some(bad) = rows.iter().find(|r| r.preset != model.preset()) {
        bail!(
            "preset mismatch: model is for preset {} but row ({}, {}, {}) has preset {}",
            model.preset(),
            bad.sequence_id,
            bad.preset,
            bad.crf,
            bad.preset
        );
    }

    let mut predictions = Vec::with_capacity(rows.len());
    for row in rows {
        let predicted_bpp = model.predict(&row.features)?;
        predictions.push((row, predicted_bpp));
    }

    let mut bytes = Vec::new();
    write_predictions_csv(&mut bytes, &predictions)?;
    write_file(&args.out, &bytes)?;
    eprintln!("predicted {} rows -> {}", predictions.len(), args.out.display());
    Ok(EXIT_OK)
}
