//! Evaluation protocol: error metrics on log-scaled bitrates, grouped
//! 5-fold cross-validation, and the per-descriptor correlation report.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{schema_line, DatasetError, DatasetRow};
use crate::regression::{fit_forest, ModelKind, PolyModel, RegressionError};

/// Folds of the cross-validation protocol (80% fit / 20% test).
pub const FOLD_COUNT: usize = 5;
/// Rows with relative error above this fraction are flagged as outliers.
pub const OUTLIER_RELATIVE_ERROR: f64 = 0.20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("log-scale target y[{index}] is zero, cannot divide by it")]
    ZeroDenominator { index: usize },
    #[error("log-scale target y[{index}] = {value} is negative; use the ln-bits convention for sub-unity targets")]
    NonPositiveLogTarget { index: usize, value: f64 },
    #[error("{side} values have zero variance")]
    ZeroVariance { side: &'static str },
    #[error("need at least {needed} distinct sequences for {FOLD_COUNT}-fold splitting, got {got}")]
    TooFewSequences { needed: usize, got: usize },
    #[error("rows span multiple presets; filter to one preset per run")]
    MixedPresets,
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

/// Mean absolute percentage error `(1/n) * sum(|y - y_hat| / y)`.
///
/// Inputs are log-scaled bitrates, so every `y` must be positive; a zero
/// or negative target makes the ratio meaningless and is rejected.
pub fn mape(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    if y.len() != y_hat.len() {
        return Err(EvalError::LengthMismatch {
            left: y.len(),
            right: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(EvalError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut total = 0.0;
    for (index, (&yi, &yhi)) in y.iter().zip(y_hat).enumerate() {
        if yi == 0.0 {
            return Err(EvalError::ZeroDenominator { index });
        }
        if yi < 0.0 {
            return Err(EvalError::NonPositiveLogTarget { index, value: yi });
        }
        total += (yi - yhi).abs() / yi;
    }
    Ok(total / y.len() as f64)
}

/// Pearson product-moment correlation coefficient.
pub fn pcc(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(EvalError::TooFewSamples {
            needed: 2,
            got: a.len(),
        });
    }
    // Exact constancy check first: the centered sums below can leave
    // rounding residue on constant input and fake a +/-1 correlation.
    if a.iter().all(|&v| v == a[0]) {
        return Err(EvalError::ZeroVariance { side: "first" });
    }
    if b.iter().all(|&v| v == b[0]) {
        return Err(EvalError::ZeroVariance { side: "second" });
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    if saa == 0.0 {
        return Err(EvalError::ZeroVariance { side: "first" });
    }
    if sbb == 0.0 {
        return Err(EvalError::ZeroVariance { side: "second" });
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// How measured/predicted bitrates are mapped into log space for the
/// metrics. Total bits keep targets well above 1, so their logarithm is
/// safely positive; bits per pixel often sit below 1 and only work when
/// the data guarantees `bpp > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogConvention {
    LnBits,
    LnBpp,
}

impl LogConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            LogConvention::LnBits => "ln-bits",
            LogConvention::LnBpp => "ln-bpp",
        }
    }

    pub fn observed(self, row: &DatasetRow) -> f64 {
        match self {
            LogConvention::LnBits => (row.target_bits as f64).ln(),
            LogConvention::LnBpp => row.target_bpp.ln(),
        }
    }

    /// Predictions are floored at one bit (resp. a vanishing bpp) so a
    /// degenerate zero prediction stays finite in log space.
    pub fn predicted(self, row: &DatasetRow, predicted_bpp: f64) -> f64 {
        match self {
            LogConvention::LnBits => (predicted_bpp * row.pixels() as f64).max(1.0).ln(),
            LogConvention::LnBpp => predicted_bpp.max(1e-12).ln(),
        }
    }
}

impl std::fmt::Display for LogConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LogConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ln-bits" => Ok(LogConvention::LnBits),
            "ln-bpp" => Ok(LogConvention::LnBpp),
            other => Err(format!("unknown log convention `{other}`, expected ln-bits|ln-bpp")),
        }
    }
}

/// Row-index sets of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles sequences by seed and partitions them into `FOLD_COUNT`
/// near-equal folds. Grouping is by `sequence_id`: every CRF/preset row
/// of one sequence lands in the same fold, so content never leaks from
/// train to test.
pub fn kfold_split(rows: &[DatasetRow], seed: u64) -> Result<Vec<Fold>, EvalError> {
    let ids: BTreeSet<&str> = rows.iter().map(|r| r.sequence_id.as_str()).collect();
    if ids.len() < FOLD_COUNT {
        return Err(EvalError::TooFewSequences {
            needed: FOLD_COUNT,
            got: ids.len(),
        });
    }
    let mut ids: Vec<&str> = ids.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let base = ids.len() / FOLD_COUNT;
    let remainder = ids.len() % FOLD_COUNT;
    let mut fold_of: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cursor = 0;
    for fold in 0..FOLD_COUNT {
        let size = base + usize::from(fold < remainder);
        for &id in &ids[cursor..cursor + size] {
            fold_of.insert(id, fold);
        }
        cursor += size;
    }

    let mut folds: Vec<Fold> = (0..FOLD_COUNT)
        .map(|_| Fold {
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    for (row_index, row) in rows.iter().enumerate() {
        let fold = fold_of[row.sequence_id.as_str()];
        for (fold_index, out) in folds.iter_mut().enumerate() {
            if fold_index == fold {
                out.test.push(row_index);
            } else {
                out.train.push(row_index);
            }
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub mape: f64,
    /// Absent when every test group had zero variance.
    pub pcc: Option<f64>,
}

/// Cross-validation result for one (model, preset) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub preset: u32,
    pub log_convention: LogConvention,
    pub seed: u64,
    pub n_rows: usize,
    pub mape: f64,
    pub pcc: Option<f64>,
    pub outlier_count: usize,
    pub per_fold: Vec<FoldMetrics>,
}

/// One pooled test prediction, for external scatter plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub sequence_id: String,
    pub preset: u32,
    pub crf: u32,
    pub fold: usize,
    pub observed: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub outlier: bool,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub scatter: Vec<ScatterPoint>,
}

struct Prediction {
    row_index: usize,
    fold: usize,
    observed: f64,
    predicted: f64,
}

type RowPredictor = Box<dyn Fn(&DatasetRow) -> Result<f64, RegressionError>>;

/// Runs the 5-fold protocol: fit on each train split, predict its test
/// split, pool the test predictions.
///
/// Forest variants report pooled MAPE/PCC over all test predictions. The
/// polynomial is fitted per CRF inside each fold and its headline
/// numbers are the averages of the per-CRF metrics. Zero-variance PCC is
/// reported as absent rather than failing the run.
pub fn cross_validate(
    rows: &[DatasetRow],
    model: ModelKind,
    seed: u64,
    convention: LogConvention,
) -> Result<CvOutcome, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::TooFewSamples { needed: FOLD_COUNT, got: 0 });
    }
    let preset = rows[0].preset;
    if rows.iter().any(|r| r.preset != preset) {
        return Err(EvalError::MixedPresets);
    }

    let folds = kfold_split(rows, seed)?;
    let mut predictions: Vec<Prediction> = Vec::with_capacity(rows.len());
    for (fold_index, fold) in folds.iter().enumerate() {
        let train: Vec<DatasetRow> = fold.train.iter().map(|&i| rows[i].clone()).collect();
        let predict: RowPredictor = match model.feature_set() {
            None => {
                let fitted = PolyModel::fit(&train, preset)?;
                Box::new(move |row: &DatasetRow| fitted.predict(&row.features))
            }
            Some(feature_set) => {
                let fitted = fit_forest(&train, feature_set, preset, seed)?;
                Box::new(move |row: &DatasetRow| fitted.predict(&row.features))
            }
        };
        for &row_index in &fold.test {
            let row = &rows[row_index];
            let predicted_bpp = predict(row)?;
            predictions.push(Prediction {
                row_index,
                fold: fold_index,
                observed: convention.observed(row),
                predicted: convention.predicted(row, predicted_bpp),
            });
        }
    }

    let (pooled_mape, pooled_pcc) = match model {
        ModelKind::Polynomial => averaged_over_crfs(rows, &predictions, |_| true)?,
        _ => pooled_metrics(&predictions, |_| true)?,
    };
    let mut per_fold = Vec::with_capacity(FOLD_COUNT);
    for fold in 0..FOLD_COUNT {
        let in_fold = |p: &Prediction| p.fold == fold;
        let (fold_mape, fold_pcc) = match model {
            ModelKind::Polynomial => averaged_over_crfs(rows, &predictions, in_fold)?,
            _ => pooled_metrics(&predictions, in_fold)?,
        };
        per_fold.push(FoldMetrics {
            mape: fold_mape,
            pcc: fold_pcc,
        });
    }

    let mut scatter = Vec::with_capacity(predictions.len());
    let mut outlier_count = 0;
    for p in &predictions {
        let row = &rows[p.row_index];
        // observed > 0 was already validated by the pooled MAPE above.
        let relative_error = (p.observed - p.predicted).abs() / p.observed;
        let outlier = relative_error > OUTLIER_RELATIVE_ERROR;
        outlier_count += usize::from(outlier);
        scatter.push(ScatterPoint {
            sequence_id: row.sequence_id.clone(),
            preset: row.preset,
            crf: row.crf,
            fold: p.fold,
            observed: p.observed,
            predicted: p.predicted,
            relative_error,
            outlier,
        });
    }

    Ok(CvOutcome {
        report: EvalReport {
            model,
            preset,
            log_convention: convention,
            seed,
            n_rows: rows.len(),
            mape: pooled_mape,
            pcc: pooled_pcc,
            outlier_count,
            per_fold,
        },
        scatter,
    })
}

fn pooled_metrics(
    predictions: &[Prediction],
    filter: impl Fn(&Prediction) -> bool,
) -> Result<(f64, Option<f64>), EvalError> {
    let mut y = Vec::new();
    let mut y_hat = Vec::new();
    for p in predictions.iter().filter(|p| filter(p)) {
        y.push(p.observed);
        y_hat.push(p.predicted);
    }
    let mape_value = mape(&y, &y_hat)?;
    let pcc_value = match pcc(&y, &y_hat) {
        Ok(v) => Some(v),
        Err(EvalError::ZeroVariance { .. }) | Err(EvalError::TooFewSamples { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((mape_value, pcc_value))
}

/// Polynomial reporting: metrics computed per CRF, then averaged.
fn averaged_over_crfs(
    rows: &[DatasetRow],
    predictions: &[Prediction],
    filter: impl Fn(&Prediction) -> bool,
) -> Result<(f64, Option<f64>), EvalError> {
    let mut by_crf: BTreeMap<u32, Vec<&Prediction>> = BTreeMap::new();
    for p in predictions.iter().filter(|p| filter(p)) {
        by_crf.entry(rows[p.row_index].crf).or_default().push(p);
    }
    if by_crf.is_empty() {
        return Err(EvalError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut mapes = Vec::new();
    let mut pccs = Vec::new();
    for group in by_crf.values() {
        let y: Vec<f64> = group.iter().map(|p| p.observed).collect();
        let y_hat: Vec<f64> = group.iter().map(|p| p.predicted).collect();
        mapes.push(mape(&y, &y_hat)?);
        match pcc(&y, &y_hat) {
            Ok(v) => pccs.push(v),
            Err(EvalError::ZeroVariance { .. }) | Err(EvalError::TooFewSamples { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let mape_avg = mapes.iter().sum::<f64>() / mapes.len() as f64;
    let pcc_avg = if pccs.is_empty() {
        None
    } else {
        Some(pccs.iter().sum::<f64>() / pccs.len() as f64)
    };
    Ok((mape_avg, pcc_avg))
}

/// PCC of one descriptor against the measured bits per pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorCorrelation {
    pub descriptor: String,
    pub n: usize,
    /// Absent when the column is constant or has fewer than two values.
    pub pcc: Option<f64>,
}

/// Correlation of each available descriptor with the encoded bits per
/// pixel. Callers filter rows to a single (preset, CRF) first.
pub fn correlation_report(rows: &[DatasetRow]) -> Vec<DescriptorCorrelation> {
    type Extractor = Box<dyn Fn(&DatasetRow) -> Option<f64>>;
    let descriptors: [(&str, Extractor); 5] = [
        ("bpp_ms", Box::new(|r| Some(r.features.bpp_ms))),
        ("mse_ms", Box::new(|r| Some(r.features.mse_ms))),
        ("ip_ratio", Box::new(|r| Some(r.features.ip_ratio))),
        ("vca_spatial", Box::new(|r| r.features.vca_spatial)),
        ("vca_temporal", Box::new(|r| r.features.vca_temporal)),
    ];
    descriptors
        .into_iter()
        .map(|(name, extract)| {
            let mut values = Vec::new();
            let mut targets = Vec::new();
            for row in rows {
                if let Some(v) = extract(row) {
                    values.push(v);
                    targets.push(row.target_bpp);
                }
            }
            let coefficient = pcc(&values, &targets).ok();
            DescriptorCorrelation {
                descriptor: name.to_owned(),
                n: values.len(),
                pcc: coefficient,
            }
        })
        .collect()
}

pub const REPORT_FORMAT: &str = "msbitrate-eval-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ReportFileRef<'a> {
    format: &'static str,
    version: u32,
    #[serde(flatten)]
    report: &'a EvalReport,
}

pub fn report_to_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(&ReportFileRef {
        format: REPORT_FORMAT,
        version: REPORT_VERSION,
        report,
    })
    .expect("report serialization is infallible")
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(crate::dataset::fmt_f64).unwrap_or_default()
}

/// Flat one-row CSV form of an [`EvalReport`].
pub fn write_report_csv<W: Write>(mut w: W, report: &EvalReport) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line("eval-report"))?;
    let mut headers = vec![
        "model".to_owned(),
        "preset".to_owned(),
        "log_convention".to_owned(),
        "seed".to_owned(),
        "n_rows".to_owned(),
        "mape".to_owned(),
        "pcc".to_owned(),
        "outlier_count".to_owned(),
    ];
    for fold in 1..=FOLD_COUNT {
        headers.push(format!("fold{fold}_mape"));
        headers.push(format!("fold{fold}_pcc"));
    }
    writeln!(w, "{}", headers.join(","))?;
    let mut fields = vec![
        report.model.to_string(),
        report.preset.to_string(),
        report.log_convention.to_string(),
        report.seed.to_string(),
        report.n_rows.to_string(),
        crate::dataset::fmt_f64(report.mape),
        fmt_opt(report.pcc),
        report.outlier_count.to_string(),
    ];
    for fold in &report.per_fold {
        fields.push(crate::dataset::fmt_f64(fold.mape));
        fields.push(fmt_opt(fold.pcc));
    }
    writeln!(w, "{}", fields.join(","))?;
    Ok(())
}

pub const SCATTER_HEADERS: [&str; 8] = [
    "sequence_id",
    "preset",
    "crf",
    "fold",
    "observed",
    "predicted",
    "relative_error",
    "outlier",
];

pub fn write_scatter_csv<W: Write>(mut w: W, points: &[ScatterPoint]) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line("scatter"))?;
    writeln!(w, "{}", SCATTER_HEADERS.join(","))?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            p.sequence_id,
            p.preset,
            p.crf,
            p.fold,
            crate::dataset::fmt_f64(p.observed),
            crate::dataset::fmt_f64(p.predicted),
            crate::dataset::fmt_f64(p.relative_error),
            u8::from(p.outlier)
        )?;
    }
    Ok(())
}

pub const CORRELATION_HEADERS: [&str; 3] = ["descriptor", "n", "pcc"];

pub fn write_correlation_csv<W: Write>(
    mut w: W,
    rows: &[DescriptorCorrelation],
) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line("correlation"))?;
    writeln!(w, "{}", CORRELATION_HEADERS.join(","))?;
    for row in rows {
        writeln!(w, "{},{},{}", row.descriptor, row.n, fmt_opt(row.pcc))?;
    }
    Ok(())
}
