//! Bitrate predictors: the analytical power-law model and a random-forest
//! regressor over the complexity descriptors, plus their self-describing
//! JSON serialization.

mod forest;
mod poly;

pub use forest::{
    fit_forest, fit_forest_with_params, FeatureSet, ForestModel, ForestParams, TreeNode,
    TREE_COUNT,
};
pub use poly::{fit_poly, predict_poly, CrfFit, FitDiagnostics, PolyModel};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FeatureVector;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("insufficient data: need at least {needed} usable rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("feature column `{0}` is required by the model but missing from the data")]
    MissingFeatureColumn(&'static str),
    #[error("model has no parameters for CRF {0}")]
    UnknownCrf(u32),
    #[error("not a recognized model file: {0}")]
    BadModelFile(String),
    #[error("model JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// The four model variants the evaluation protocol compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Polynomial,
    Vca,
    Ms,
    MsVca,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Polynomial,
        ModelKind::Vca,
        ModelKind::Ms,
        ModelKind::MsVca,
    ];

    /// Feature set of the forest variants; `None` for the polynomial.
    pub fn feature_set(self) -> Option<FeatureSet> {
        match self {
            ModelKind::Polynomial => None,
            ModelKind::Vca => Some(FeatureSet::Vca),
            ModelKind::Ms => Some(FeatureSet::Ms),
            ModelKind::MsVca => Some(FeatureSet::MsVca),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Polynomial => "polynomial",
            ModelKind::Vca => "vca",
            ModelKind::Ms => "ms",
            ModelKind::MsVca => "ms-vca",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "polynomial" => Ok(ModelKind::Polynomial),
            "vca" => Ok(ModelKind::Vca),
            "ms" => Ok(ModelKind::Ms),
            "ms-vca" => Ok(ModelKind::MsVca),
            other => Err(format!(
                "unknown model `{other}`, expected polynomial|vca|ms|ms-vca"
            )),
        }
    }
}

/// A fitted predictor of either family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum BitrateModel {
    Polynomial(PolyModel),
    Forest(ForestModel),
}

impl BitrateModel {
    pub fn predict(&self, features: &FeatureVector) -> Result<f64, RegressionError> {
        match self {
            BitrateModel::Polynomial(m) => predict_poly(m, features),
            BitrateModel::Forest(m) => m.predict(features),
        }
    }

    pub fn preset(&self) -> u32 {
        match self {
            BitrateModel::Polynomial(m) => m.preset,
            BitrateModel::Forest(m) => m.preset,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            BitrateModel::Polynomial(_) => ModelKind::Polynomial,
            BitrateModel::Forest(m) => match m.feature_set {
                FeatureSet::Vca => ModelKind::Vca,
                FeatureSet::Ms => ModelKind::Ms,
                FeatureSet::MsVca => ModelKind::MsVca,
            },
        }
    }
}

pub const MODEL_FORMAT: &str = "msbitrate-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format: &'static str,
    version: u32,
    #[serde(flatten)]
    model: &'a BitrateModel,
}

#[derive(Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: BitrateModel,
}

/// Serializes with a format/version envelope. Reloading through
/// [`model_from_json`] is prediction-exact: floats are emitted in
/// shortest round-trip form.
pub fn model_to_json(model: &BitrateModel) -> String {
    serde_json::to_string_pretty(&ModelFileRef {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        model,
    })
    .expect("model serialization is infallible")
}

pub fn model_from_json(json: &str) -> Result<BitrateModel, RegressionError> {
    // Deep trees can exceed serde_json's default nesting guard; models are
    // local artifacts, so the guard is lifted for this one entry point.
    let mut de = serde_json::Deserializer::from_str(json);
    de.disable_recursion_limit();
    let file = ModelFile::deserialize(&mut de)?;
    de.end()?;
    if file.format != MODEL_FORMAT {
        return Err(RegressionError::BadModelFile(format!(
            "format is `{}`, expected `{MODEL_FORMAT}`",
            file.format
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(RegressionError::BadModelFile(format!(
            "version {} is not supported (expected {MODEL_VERSION})",
            file.version
        )));
    }
    Ok(file.model)
}
