//! Random-forest regression over the complexity descriptors.
//!
//! Fifty CART trees are grown on `ln(bits per pixel)`: one bootstrap
//! sample per tree, a random subset of `max(1, p/3)` features per node,
//! splits chosen by minimum weighted child variance, growth stopped at
//! node size < 2 or zero variance, leaves storing the mean target. Each
//! tree draws from its own stream of the seeded generator, so serial and
//! parallel fits produce identical forests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RegressionError;
use crate::dataset::{DatasetRow, FeatureVector};

/// Number of trees in every forest.
pub const TREE_COUNT: usize = 50;
const MIN_FOREST_ROWS: usize = 10;

/// Which feature columns a forest consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    /// CRF plus external spatial/temporal complexity.
    Vca,
    /// CRF plus the motion-search descriptors.
    Ms,
    /// Union of the two.
    MsVca,
}

impl FeatureSet {
    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            FeatureSet::Vca => &["crf", "vca_spatial", "vca_temporal"],
            FeatureSet::Ms => &["crf", "bpp_ms", "mse_ms", "ip_ratio"],
            FeatureSet::MsVca => &[
                "crf",
                "bpp_ms",
                "mse_ms",
                "ip_ratio",
                "vca_spatial",
                "vca_temporal",
            ],
        }
    }

    /// Extracts the columns in `feature_names` order.
    pub fn extract(self, features: &FeatureVector) -> Result<Vec<f64>, RegressionError> {
        let vca_spatial = || {
            features
                .vca_spatial
                .ok_or(RegressionError::MissingFeatureColumn("vca_spatial"))
        };
        let vca_temporal = || {
            features
                .vca_temporal
                .ok_or(RegressionError::MissingFeatureColumn("vca_temporal"))
        };
        Ok(match self {
            FeatureSet::Vca => vec![f64::from(features.crf), vca_spatial()?, vca_temporal()?],
            FeatureSet::Ms => vec![
                f64::from(features.crf),
                features.bpp_ms,
                features.mse_ms,
                features.ip_ratio,
            ],
            FeatureSet::MsVca => vec![
                f64::from(features.crf),
                features.bpp_ms,
                features.mse_ms,
                features.ip_ratio,
                vca_spatial()?,
                vca_temporal()?,
            ],
        })
    }
}

/// Axis-aligned binary regression tree. Rows with
/// `x[feature] <= threshold` descend left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaf_values(&self, out: &mut Vec<f64>) {
        match self {
            TreeNode::Leaf { value } => out.push(*value),
            TreeNode::Split { left, right, .. } => {
                left.leaf_values(out);
                right.leaf_values(out);
            }
        }
    }
}

/// Hyperparameters beyond the fixed tree count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestParams {
    /// Nodes smaller than this become leaves.
    pub min_node_size: usize,
    /// Features tried per node; defaults to `max(1, p/3)`.
    pub mtry: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            min_node_size: 2,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub preset: u32,
    pub feature_set: FeatureSet,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub trees: Vec<TreeNode>,
}

impl ForestModel {
    /// `exp` of the mean tree output; strictly positive.
    pub fn predict(&self, features: &FeatureVector) -> Result<f64, RegressionError> {
        let x = self.feature_set.extract(features)?;
        let sum: f64 = self.trees.iter().map(|t| t.predict(&x)).sum();
        Ok((sum / self.trees.len() as f64).exp())
    }

    /// Range of leaf values across all trees (log space); predictions of
    /// a single tree can never leave it.
    pub fn leaf_value_range(&self) -> (f64, f64) {
        let mut values = Vec::new();
        for tree in &self.trees {
            tree.leaf_values(&mut values);
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }
}

pub fn fit_forest(
    rows: &[DatasetRow],
    feature_set: FeatureSet,
    preset: u32,
    seed: u64,
) -> Result<ForestModel, RegressionError> {
    fit_forest_with_params(rows, feature_set, preset, seed, &ForestParams::default())
}

pub fn fit_forest_with_params(
    rows: &[DatasetRow],
    feature_set: FeatureSet,
    preset: u32,
    seed: u64,
    params: &ForestParams,
) -> Result<ForestModel, RegressionError> {
    if rows.len() < MIN_FOREST_ROWS {
        return Err(RegressionError::InsufficientData {
            needed: MIN_FOREST_ROWS,
            got: rows.len(),
        });
    }
    let xs: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| feature_set.extract(&r.features))
        .collect::<Result<_, _>>()?;
    let ys: Vec<f64> = rows.iter().map(|r| r.target_bpp.ln()).collect();
    let p = feature_set.feature_names().len();
    let mtry = params.mtry.unwrap_or((p / 3).max(1)).clamp(1, p);
    let min_node_size = params.min_node_size.max(2);

    let trees: Vec<TreeNode> = (0..TREE_COUNT)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(tree_index as u64 + 1);
            let bootstrap: Vec<usize> = (0..ys.len()).map(|_| rng.gen_range(0..ys.len())).collect();
            grow(&xs, &ys, bootstrap, &mut rng, mtry, min_node_size)
        })
        .collect();

    Ok(ForestModel {
        preset,
        feature_set,
        seed,
        feature_names: feature_set
            .feature_names()
            .iter()
            .map(|&n| n.to_owned())
            .collect(),
        trees,
    })
}

fn mean(ys: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| ys[i]).sum::<f64>() / idx.len() as f64
}

fn grow(
    xs: &[Vec<f64>],
    ys: &[f64],
    idx: Vec<usize>,
    rng: &mut ChaCha8Rng,
    mtry: usize,
    min_node_size: usize,
) -> TreeNode {
    let node_mean = mean(ys, &idx);
    if idx.len() < min_node_size || constant_targets(ys, &idx) {
        return TreeNode::Leaf { value: node_mean };
    }

    // Partial Fisher-Yates draw of mtry features.
    let p = xs[0].len();
    let mut feature_order: Vec<usize> = (0..p).collect();
    for i in 0..mtry.min(p) {
        let j = rng.gen_range(i..p);
        feature_order.swap(i, j);
    }

    let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
    let mut order = idx.clone();
    for &feature in &feature_order[..mtry] {
        order.sort_unstable_by(|&a, &b| {
            xs[a][feature]
                .partial_cmp(&xs[b][feature])
                .expect("features are finite")
                .then(a.cmp(&b))
        });
        // Left-to-right running sums let every split position be scored
        // in one pass.
        let total_sum: f64 = order.iter().map(|&i| ys[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| ys[i] * ys[i]).sum();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for k in 1..order.len() {
            let y = ys[order[k - 1]];
            left_sum += y;
            left_sq += y * y;
            let lo = xs[order[k - 1]][feature];
            let hi = xs[order[k]][feature];
            if lo == hi {
                continue;
            }
            let left_n = k as f64;
            let right_n = (order.len() - k) as f64;
            let left_sse = left_sq - left_sum * left_sum / left_n;
            let right_sum = total_sum - left_sum;
            let right_sse = (total_sq - left_sq) - right_sum * right_sum / right_n;
            let sse = left_sse + right_sse;
            if best.is_none_or(|(b, _, _)| sse < b) {
                best = Some((sse, feature, lo + (hi - lo) / 2.0));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        // All sampled features are constant over this node.
        return TreeNode::Leaf { value: node_mean };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.into_iter().partition(|&i| xs[i][feature] <= threshold);
    debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(xs, ys, left_idx, rng, mtry, min_node_size)),
        right: Box::new(grow(xs, ys, right_idx, rng, mtry, min_node_size)),
    }
}

fn constant_targets(ys: &[f64], idx: &[usize]) -> bool {
    let first = ys[idx[0]];
    idx.iter().all(|&i| ys[i] == first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{model_from_json, model_to_json, BitrateModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(i: usize, crf: u32, bpp_ms: f64, mse_ms: f64, ip_ratio: f64, target_bpp: f64) -> DatasetRow {
        DatasetRow {
            sequence_id: format!("s{i}"),
            preset: 5,
            crf,
            width: 64,
            height: 64,
            frame_count: 30,
            features: FeatureVector {
                crf,
                bpp_ms,
                mse_ms,
                ip_ratio,
                vca_spatial: None,
                vca_temporal: None,
            },
            target_bpp,
            target_bits: (target_bpp * 64.0 * 64.0 * 30.0).max(1.0) as u64,
        }
    }

    fn random_rows(n: usize, seed: u64, target: impl Fn(u32, f64, f64, f64) -> f64) -> Vec<DatasetRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let crf = crate::dataset::CRF_GRID[i % 4];
                let bpp_ms = rng.gen_range(0.001..0.06);
                let mse_ms = rng.gen_range(0.5..4000.0);
                let ip_ratio = rng.gen_range(0.0..1.0);
                row(i, crf, bpp_ms, mse_ms, ip_ratio, target(crf, bpp_ms, mse_ms, ip_ratio))
            })
            .collect()
    }

    #[test]
    fn tiny_datasets_are_rejected() {
        let rows = random_rows(9, 1, |_, b, _, _| b + 0.1);
        assert!(matches!(
            fit_forest(&rows, FeatureSet::Ms, 5, 1),
            Err(RegressionError::InsufficientData { needed: 10, got: 9 })
        ));
    }

    #[test]
    fn constant_training_target_predicts_that_target() {
        let rows: Vec<DatasetRow> = (0..12).map(|i| row(i, 32, 0.01 * (i + 1) as f64, 10.0, 0.5, 0.25)).collect();
        let model = fit_forest(&rows, FeatureSet::Ms, 5, 3).unwrap();
        assert_eq!(model.trees.len(), TREE_COUNT);
        let query = FeatureVector {
            crf: 32,
            bpp_ms: 0.5,
            mse_ms: 999.0,
            ip_ratio: 0.9,
            vca_spatial: None,
            vca_temporal: None,
        };
        let got = model.predict(&query).unwrap();
        assert!((got - 0.25).abs() < 1e-12);
    }

    #[test]
    fn step_function_of_crf_is_learned() {
        let step = |crf: u32, _: f64, _: f64, _: f64| match crf {
            32 => 2.0,
            43 => 0.9,
            55 => 0.3,
            _ => 0.08,
        };
        let rows = random_rows(500, 5, step);
        let model = fit_forest(&rows, FeatureSet::Ms, 5, 11).unwrap();
        let (mut y, mut y_hat) = (Vec::new(), Vec::new());
        for r in &rows {
            y.push(r.target_bpp.ln());
            y_hat.push(model.predict(&r.features).unwrap().ln());
        }
        let pcc = crate::eval::pcc(&y, &y_hat).unwrap();
        assert!(pcc >= 0.99, "training-set pcc = {pcc}");
    }

    #[test]
    fn same_seed_gives_bit_identical_forests() {
        let rows = random_rows(80, 9, |crf, b, m, _| {
            0.4 * b.powf(1.1) + 0.001 * m.powf(0.8) + f64::from(crf) * 1e-4
        });
        let a = fit_forest(&rows, FeatureSet::Ms, 5, 1234).unwrap();
        let b = fit_forest(&rows, FeatureSet::Ms, 5, 1234).unwrap();
        assert_eq!(
            model_to_json(&BitrateModel::Forest(a.clone())),
            model_to_json(&BitrateModel::Forest(b))
        );
        let c = fit_forest(&rows, FeatureSet::Ms, 5, 1235).unwrap();
        assert_ne!(
            model_to_json(&BitrateModel::Forest(a)),
            model_to_json(&BitrateModel::Forest(c))
        );
    }

    #[test]
    fn predictions_stay_inside_the_training_target_range() {
        let rows = random_rows(100, 13, |_, b, m, _| 0.5 * b + 1e-4 * m + 0.01);
        let model = fit_forest(&rows, FeatureSet::Ms, 5, 7).unwrap();
        let (lo, hi) = model.leaf_value_range();
        let targets: Vec<f64> = rows.iter().map(|r| r.target_bpp.ln()).collect();
        let t_lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let t_hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= t_lo && hi <= t_hi);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let query = FeatureVector {
                crf: 43,
                bpp_ms: rng.gen_range(0.0..10.0),
                mse_ms: rng.gen_range(0.0..100000.0),
                ip_ratio: rng.gen_range(0.0..1.0),
                vca_spatial: None,
                vca_temporal: None,
            };
            let pred = model.predict(&query).unwrap().ln();
            assert!(pred >= t_lo - 1e-12 && pred <= t_hi + 1e-12);
        }
    }

    #[test]
    fn missing_vca_columns_are_reported() {
        let rows = random_rows(20, 15, |_, b, _, _| b + 0.01);
        assert!(matches!(
            fit_forest(&rows, FeatureSet::Vca, 5, 1),
            Err(RegressionError::MissingFeatureColumn("vca_spatial"))
        ));
        assert!(matches!(
            fit_forest(&rows, FeatureSet::MsVca, 5, 1),
            Err(RegressionError::MissingFeatureColumn(_))
        ));
    }

    #[test]
    fn forest_round_trips_through_json() {
        let rows = random_rows(60, 17, |_, b, m, _| 0.3 * b + 2e-4 * m + 0.02);
        let model = fit_forest(&rows, FeatureSet::Ms, 10, 5).unwrap();
        let json = model_to_json(&BitrateModel::Forest(model.clone()));
        let BitrateModel::Forest(reloaded) = model_from_json(&json).unwrap() else {
            panic!("kind changed in round trip");
        };
        assert_eq!(model, reloaded);
    }

    #[test]
    fn tree_depth_stays_moderate_at_desk_scale() {
        let rows = random_rows(500, 23, |crf, b, m, i| {
            (0.5 * b.powf(1.2) + 0.001 * m.powf(0.8)) * (1.0 + 0.05 * i) + f64::from(crf) * 1e-4
        });
        let model = fit_forest(&rows, FeatureSet::Ms, 5, 77).unwrap();
        let max_depth = model.trees.iter().map(TreeNode::depth).max().unwrap();
        assert!(max_depth < 100, "max tree depth {max_depth}");
    }
}
