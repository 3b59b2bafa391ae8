use std::path::PathBuf;

use anyhow::Result;

use msbitrate_core::dataset::{
    join_dataset, read_encodings_csv, read_features_csv, read_vca_csv, write_dataset_csv,
    write_rejects_csv,
};

use super::{read_file, write_file, EXIT_OK};

#[derive(clap::Args)]
pub struct JoinArgs {
    /// Features CSV from `analyze`
    #[arg(long)]
    pub features: PathBuf,

    /// Encodings CSV with measured sizes:
    /// sequence_id,preset,crf,bits,frame_count
    #[arg(long)]
    pub encodings: PathBuf,

    /// Optional VCA CSV: sequence_id,vca_spatial,vca_temporal
    #[arg(long)]
    pub vca: Option<PathBuf>,

    /// Output dataset CSV
    #[arg(long)]
    pub out: PathBuf,

    /// Reject file for unmatched rows (defaults next to --out)
    #[arg(long)]
    pub rejects: Option<PathBuf>,
}

pub fn run(args: JoinArgs) -> Result<i32> {
    let features = read_features_csv(&read_file(&args.features)?)?;
    let encodings = read_encodings_csv(&read_file(&args.encodings)?)?;
    let vca = match &args.vca {
        Some(path) => Some(read_vca_csv(&read_file(path)?)?),
        None => None,
    };

    let outcome = join_dataset(&features, &encodings, vca.as_deref())?;

    let mut bytes = Vec::new();
    write_dataset_csv(&mut bytes, &outcome.rows)?;
    write_file(&args.out, &bytes)?;

    let rejects_path = args
        .rejects
        .unwrap_or_else(|| args.out.with_extension("rejects.csv"));
    let mut bytes = Vec::new();
    write_rejects_csv(&mut bytes, &outcome.rejects)?;
    write_file(&rejects_path, &bytes)?;

    eprintln!(
        "joined {} rows ({} rejects) -> {}",
        outcome.rows.len(),
        outcome.rejects.len(),
        args.out.display()
    );
    Ok(EXIT_OK)
}
