//! The analytical bitrate model: one power law per CRF,
//! `bpp = t0 * bpp_ms^t1 + t2 * mse_ms^t3`, fitted by damped
//! Gauss-Newton with the coefficients projected to stay non-negative.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RegressionError;
use crate::dataset::{DatasetRow, FeatureVector};

const MIN_FIT_ROWS: usize = 4;
const MAX_ITERATIONS: u32 = 500;
const RELATIVE_RESIDUAL_TOL: f64 = 1e-10;
const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Euclidean norm of the residual vector at the returned parameters.
    pub residual_norm: f64,
    pub iterations: u32,
    /// False when the fit returned best-so-far without meeting the
    /// relative-residual tolerance.
    pub converged: bool,
    /// Residual norm after each accepted step, starting at the initial
    /// guess. Non-increasing by construction.
    #[serde(skip)]
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrfFit {
    pub theta: [f64; 4],
    pub diagnostics: FitDiagnostics,
}

/// Per-CRF parameter vectors for one preset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyModel {
    pub preset: u32,
    #[serde(with = "crf_key_map")]
    pub per_crf: BTreeMap<u32, CrfFit>,
}

/// JSON object keys are strings; spell the CRF keys out explicitly so
/// the map survives serde's content buffering under `flatten`.
mod crf_key_map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::CrfFit;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<u32, CrfFit>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let mut out = serializer.serialize_map(Some(map.len()))?;
        for (crf, fit) in map {
            out.serialize_entry(&crf.to_string(), fit)?;
        }
        out.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<u32, CrfFit>, D::Error> {
        let raw = BTreeMap::<String, CrfFit>::deserialize(deserializer)?;
        raw.into_iter()
            .map(|(key, fit)| {
                key.parse::<u32>()
                    .map(|crf| (crf, fit))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

impl PolyModel {
    /// Fits one parameter vector per distinct CRF found in `rows`.
    pub fn fit(rows: &[DatasetRow], preset: u32) -> Result<Self, RegressionError> {
        let crfs: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.crf).collect();
        if crfs.is_empty() {
            return Err(RegressionError::InsufficientData {
                needed: MIN_FIT_ROWS,
                got: 0,
            });
        }
        let mut per_crf = BTreeMap::new();
        for crf in crfs {
            per_crf.insert(crf, fit_poly(rows, crf)?);
        }
        Ok(Self { preset, per_crf })
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64, RegressionError> {
        predict_poly(self, features)
    }
}

fn model_value(theta: &[f64; 4], bpp_ms: f64, mse_ms: f64) -> f64 {
    // powf(0, e) = 0 for e > 0, which is the wanted 0^e convention.
    theta[0] * bpp_ms.powf(theta[1]) + theta[2] * mse_ms.powf(theta[3])
}

/// Evaluates the fitted power law for the feature's CRF, clamped to >= 0.
pub fn predict_poly(model: &PolyModel, features: &FeatureVector) -> Result<f64, RegressionError> {
    let fit = model
        .per_crf
        .get(&features.crf)
        .ok_or(RegressionError::UnknownCrf(features.crf))?;
    Ok(model_value(&fit.theta, features.bpp_ms, features.mse_ms).max(0.0))
}

/// Least-squares fit of the power law at one CRF.
///
/// Rows with `bpp_ms` or `mse_ms` equal to zero are excluded (a power of
/// zero with a free exponent is degenerate); at least four usable rows
/// must remain. Four starts with exponents in {0.5, 1} guard against
/// local minima; the best final residual wins.
pub fn fit_poly(rows: &[DatasetRow], crf: u32) -> Result<CrfFit, RegressionError> {
    let points: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.crf == crf && r.features.bpp_ms > 0.0 && r.features.mse_ms > 0.0)
        .map(|r| (r.features.bpp_ms, r.features.mse_ms, r.target_bpp))
        .collect();
    if points.len() < MIN_FIT_ROWS {
        return Err(RegressionError::InsufficientData {
            needed: MIN_FIT_ROWS,
            got: points.len(),
        });
    }
    let starts = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 0.5, 1.0, 1.0],
        [1.0, 1.0, 1.0, 0.5],
        [1.0, 0.5, 1.0, 0.5],
    ];
    let mut best: Option<CrfFit> = None;
    for start in starts {
        let fit = levenberg_marquardt(&points, start);
        let better = best.as_ref().is_none_or(|b| {
            fit.diagnostics.residual_norm < b.diagnostics.residual_norm
        });
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start was evaluated"))
}

fn project(mut theta: [f64; 4]) -> [f64; 4] {
    theta[0] = theta[0].max(0.0);
    theta[2] = theta[2].max(0.0);
    theta
}

fn sum_squared_residuals(points: &[(f64, f64, f64)], theta: &[f64; 4]) -> f64 {
    let mut total = 0.0;
    for &(bpp_ms, mse_ms, y) in points {
        let r = y - model_value(theta, bpp_ms, mse_ms);
        total += r * r;
    }
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

fn levenberg_marquardt(points: &[(f64, f64, f64)], start: [f64; 4]) -> CrfFit {
    let mut theta = project(start);
    let mut cost = sum_squared_residuals(points, &theta);
    let mut lambda = 1e-3;
    let mut history = vec![cost.sqrt()];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS && cost.is_finite() {
        iterations += 1;

        // Normal equations from the analytic gradient of the model.
        let mut h = [[0.0f64; 4]; 4];
        let mut g = [0.0f64; 4];
        for &(bpp_ms, mse_ms, y) in points {
            let pow_b = bpp_ms.powf(theta[1]);
            let pow_m = mse_ms.powf(theta[3]);
            let r = y - (theta[0] * pow_b + theta[2] * pow_m);
            let grad = [
                pow_b,
                theta[0] * pow_b * bpp_ms.ln(),
                pow_m,
                theta[2] * pow_m * mse_ms.ln(),
            ];
            for i in 0..4 {
                g[i] += grad[i] * r;
                for j in 0..4 {
                    h[i][j] += grad[i] * grad[j];
                }
            }
        }
        if !g.iter().all(|v| v.is_finite()) {
            break;
        }

        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let mut damped = h;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda;
            }
            let Some(delta) = solve4(damped, g) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = project([
                theta[0] + delta[0],
                theta[1] + delta[1],
                theta[2] + delta[2],
                theta[3] + delta[3],
            ]);
            let candidate_cost = sum_squared_residuals(points, &candidate);
            if candidate_cost <= cost {
                let old_norm = cost.sqrt();
                let new_norm = candidate_cost.sqrt();
                let relative_drop = if old_norm > 0.0 {
                    (old_norm - new_norm) / old_norm
                } else {
                    0.0
                };
                theta = candidate;
                cost = candidate_cost;
                history.push(new_norm);
                lambda = (lambda * 0.1).max(LAMBDA_MIN);
                accepted = true;
                if relative_drop < RELATIVE_RESIDUAL_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || converged {
            break;
        }
    }

    CrfFit {
        theta,
        diagnostics: FitDiagnostics {
            residual_norm: cost.sqrt(),
            iterations,
            converged,
            residual_history: history,
        },
    }
}

/// Solves a 4x4 linear system by Gaussian elimination with partial
/// pivoting; `None` when the damped system is still singular.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot_row = (col..4)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot_values = a[col];
        for row in col + 1..4 {
            let factor = a[row][col] / pivot_values[col];
            for (k, value) in a[row].iter_mut().enumerate().skip(col) {
                *value -= factor * pivot_values[k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for col in (0..4).rev() {
        let mut acc = b[col];
        for k in col + 1..4 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}
