use std::path::PathBuf;

use anyhow::{bail, Result};

use msbitrate_core::dataset::read_dataset_csv;
use msbitrate_core::regression::{
    fit_forest_with_params, model_to_json, BitrateModel, ForestParams, ModelKind, PolyModel,
};

use super::{read_file, write_file, EXIT_OK};

#[derive(clap::Args)]
pub struct FitArgs {
    /// Dataset CSV from `join`
    #[arg(long)]
    pub dataset: PathBuf,

    /// Model to fit: polynomial|vca|ms|ms-vca
    #[arg(long)]
    pub model: ModelKind,

    /// Encoder preset the model is for; rows of other presets are ignored
    #[arg(long)]
    pub preset: u32,

    /// RNG seed (forests are deterministic given the seed)
    #[arg(long)]
    pub seed: u64,

    /// Output model JSON
    #[arg(long)]
    pub out: PathBuf,

    /// Forest: minimum node size before a node becomes a leaf
    #[arg(long)]
    pub min_node_size: Option<usize>,

    /// Forest: features tried per split (default max(1, p/3))
    #[arg(long)]
    pub mtry: Option<usize>,

    /// Worker threads for tree fitting
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

pub fn run(args: FitArgs) -> Result<i32> {
    let rows = read_dataset_csv(&read_file(&args.dataset)?)?;
    let rows: Vec<_> = rows.into_iter().filter(|r| r.preset == args.preset).collect();
    if rows.is_empty() {
        bail!("dataset has no rows for preset {}", args.preset);
    }

    let model = match args.model.feature_set() {
        None => BitrateModel::Polynomial(PolyModel::fit(&rows, args.preset)?),
        Some(feature_set) => {
            let params = ForestParams {
                min_node_size: args.min_node_size.unwrap_or(2),
                mtry: args.mtry,
            };
            let pool = super::build_pool(args.threads)?;
            let forest = pool.install(|| {
                fit_forest_with_params(&rows, feature_set, args.preset, args.seed, &params)
            })?;
            BitrateModel::Forest(forest)
        }
    };

    let mut json = model_to_json(&model);
    json.push('\n');
    write_file(&args.out, json.as_bytes())?;
    eprintln!(
        "fitted {} model on {} preset-{} rows -> {}",
        args.model,
        rows.len(),
        args.preset,
        args.out.display()
    );
    Ok(EXIT_OK)
}
