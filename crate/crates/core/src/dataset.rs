//! Dataset rows, feature vectors and the flat CSV formats every pipeline
//! stage exchanges.
//!
//! Every CSV written by this crate starts with a `# schema:` comment line
//! naming the format and version; readers reject unknown versions and
//! accept version-less files only when the header row matches exactly.
//! Encoded sizes are always ingested from an external encodings CSV, the
//! toolchain never produces them itself.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::SequenceFeatures;
use crate::frame::Framerate;

/// Encoder speed presets a dataset may reference.
pub const PRESETS: [u32; 2] = [5, 10];
/// Constant-rate-factor grid a dataset may reference.
pub const CRF_GRID: [u32; 4] = [32, 43, 55, 63];

pub const FEATURES_KIND: &str = "features";
pub const ENCODINGS_KIND: &str = "encodings";
pub const VCA_KIND: &str = "vca";
pub const DATASET_KIND: &str = "dataset";
pub const REJECTS_KIND: &str = "rejects";
pub const PREDICTIONS_KIND: &str = "predictions";
pub const MANIFEST_KIND: &str = "manifest";
pub const BLOCKS_KIND: &str = "blocks";

pub const FEATURES_HEADERS: [&str; 10] = [
    "sequence_id",
    "width",
    "height",
    "framerate",
    "n_frames",
    "mse_ms",
    "bpp_ms",
    "ip_ratio",
    "analysis_wall_time",
    "error",
];
pub const ENCODINGS_HEADERS: [&str; 5] = ["sequence_id", "preset", "crf", "bits", "frame_count"];
pub const VCA_HEADERS: [&str; 3] = ["sequence_id", "vca_spatial", "vca_temporal"];
pub const DATASET_HEADERS: [&str; 13] = [
    "sequence_id",
    "preset",
    "crf",
    "width",
    "height",
    "frame_count",
    "mse_ms",
    "bpp_ms",
    "ip_ratio",
    "vca_spatial",
    "vca_temporal",
    "target_bpp",
    "target_bits",
];
pub const REJECTS_HEADERS: [&str; 5] = ["side", "sequence_id", "preset", "crf", "reason"];
pub const PREDICTIONS_HEADERS: [&str; 15] = [
    "sequence_id",
    "preset",
    "crf",
    "width",
    "height",
    "frame_count",
    "mse_ms",
    "bpp_ms",
    "ip_ratio",
    "vca_spatial",
    "vca_temporal",
    "target_bpp",
    "target_bits",
    "predicted_bpp",
    "relative_error",
];
pub const MANIFEST_HEADERS: [&str; 4] = ["path", "width", "height", "framerate"];
pub const BLOCKS_HEADERS: [&str; 10] = [
    "frame_index",
    "block_x",
    "block_y",
    "kind",
    "mse_intra",
    "mse_mv",
    "mse_block",
    "bitsize",
    "dx",
    "dy",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unrecognized schema line `{found}`, expected `{expected}`")]
    UnknownSchema { found: String, expected: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("join produced no rows")]
    EmptyJoin,
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn schema_tag(kind: &str) -> String {
    format!("msbitrate/{kind}/v1")
}

pub fn schema_line(kind: &str) -> String {
    format!("# schema: {}", schema_tag(kind))
}

fn strip_schema_line<'a>(content: &'a str, kind: &str) -> Result<(&'a str, u64), DatasetError> {
    let first = content.lines().next().unwrap_or("");
    if !first.trim_start().starts_with('#') {
        return Ok((content, 0));
    }
    let expected = schema_line(kind);
    if first.trim() != expected {
        return Err(DatasetError::UnknownSchema {
            found: first.trim().to_owned(),
            expected,
        });
    }
    let offset = (first.len() + 1).min(content.len());
    Ok((&content[offset..], 1))
}

/// Parses a schema-versioned CSV into raw string rows after validating
/// the header row. Each row carries its 1-based source line number.
fn parse_csv(
    content: &str,
    kind: &str,
    expected_headers: &[&str],
) -> Result<Vec<(u64, Vec<String>)>, DatasetError> {
    let (body, line_offset) = strip_schema_line(content, kind)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    if headers != expected_headers {
        return Err(DatasetError::SchemaMismatch(format!(
            "{kind} file: expected columns {expected_headers:?}, found {headers:?}"
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() + line_offset)
            .unwrap_or(0);
        if record.len() != expected_headers.len() {
            return Err(DatasetError::Parse {
                line,
                message: format!(
                    "expected {} fields, found {}",
                    expected_headers.len(),
                    record.len()
                ),
            });
        }
        rows.push((line, record.iter().map(|f| f.to_owned()).collect()));
    }
    Ok(rows)
}

fn csv_safe(field: &str) -> Result<&str, DatasetError> {
    if field.contains([',', '"', '\n', '\r']) {
        return Err(DatasetError::InvalidValue(format!(
            "field `{field}` contains CSV delimiter or quote characters"
        )));
    }
    Ok(field)
}

/// Canonical float formatting shared by all CSV writers: Rust's shortest
/// round-trip form, so identical values always print identically.
pub fn fmt_f64(v: f64) -> String {
    debug_assert!(v.is_finite());
    format!("{v}")
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn parse_num<T: std::str::FromStr>(
    value: &str,
    field: &str,
    line: u64,
) -> Result<T, DatasetError> {
    value.parse().map_err(|_| DatasetError::Parse {
        line,
        message: format!("cannot parse {field} from `{value}`"),
    })
}

fn parse_opt_f64(value: &str, field: &str, line: u64) -> Result<Option<f64>, DatasetError> {
    if value.is_empty() {
        Ok(None)
    } else {
        parse_num::<f64>(value, field, line).map(Some)
    }
}

/// Per-row model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub crf: u32,
    pub bpp_ms: f64,
    pub mse_ms: f64,
    pub ip_ratio: f64,
    pub vca_spatial: Option<f64>,
    pub vca_temporal: Option<f64>,
}

impl FeatureVector {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !CRF_GRID.contains(&self.crf) {
            return Err(DatasetError::InvalidValue(format!(
                "crf {} is outside the supported grid {CRF_GRID:?}",
                self.crf
            )));
        }
        let named = [
            ("bpp_ms", Some(self.bpp_ms)),
            ("mse_ms", Some(self.mse_ms)),
            ("ip_ratio", Some(self.ip_ratio)),
            ("vca_spatial", self.vca_spatial),
            ("vca_temporal", self.vca_temporal),
        ];
        for (name, value) in named {
            if let Some(v) = value {
                if !v.is_finite() || v < 0.0 {
                    return Err(DatasetError::InvalidValue(format!(
                        "feature {name} = {v} must be finite and non-negative"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One (sequence, preset, CRF) observation with its measured target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub sequence_id: String,
    pub preset: u32,
    pub crf: u32,
    pub width: u32,
    pub height: u32,
    pub frame_count: u64,
    pub features: FeatureVector,
    /// Measured encoded bits per pixel (the prediction target).
    pub target_bpp: f64,
    /// Measured total encoded bits.
    pub target_bits: u64,
}

impl DatasetRow {
    pub fn pixels(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height) * self.frame_count
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if !PRESETS.contains(&self.preset) {
            return Err(DatasetError::InvalidValue(format!(
                "preset {} is outside the supported set {PRESETS:?}",
                self.preset
            )));
        }
        if self.crf != self.features.crf {
            return Err(DatasetError::InvalidValue(format!(
                "row crf {} disagrees with feature crf {}",
                self.crf, self.features.crf
            )));
        }
        if self.target_bpp <= 0.0 || !self.target_bpp.is_finite() {
            return Err(DatasetError::InvalidValue(format!(
                "target_bpp {} must be positive and finite",
                self.target_bpp
            )));
        }
        self.features.validate()
    }
}

/// One line of an analysis features CSV: either a successful analysis or
/// a per-file failure (the batch does not abort on individual files).
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureRow {
    Ok {
        sequence_id: String,
        framerate: Framerate,
        features: SequenceFeatures,
    },
    Failed {
        sequence_id: String,
        error: String,
    },
}

impl FeatureRow {
    pub fn sequence_id(&self) -> &str {
        match self {
            FeatureRow::Ok { sequence_id, .. } | FeatureRow::Failed { sequence_id, .. } => {
                sequence_id
            }
        }
    }
}

pub fn write_features_csv<W: Write>(
    mut w: W,
    rows: &[FeatureRow],
    include_wall_time: bool,
) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line(FEATURES_KIND))?;
    writeln!(w, "{}", FEATURES_HEADERS.join(","))?;
    for row in rows {
        match row {
            FeatureRow::Ok {
                sequence_id,
                framerate,
                features,
            } => {
                let wall = if include_wall_time {
                    fmt_f64(features.analysis_wall_time)
                } else {
                    String::new()
                };
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},",
                    csv_safe(sequence_id)?,
                    features.width,
                    features.height,
                    framerate,
                    features.n_frames,
                    fmt_f64(features.mse_ms),
                    fmt_f64(features.bpp_ms),
                    fmt_f64(features.ip_ratio),
                    wall,
                )?;
            }
            FeatureRow::Failed { sequence_id, error } => {
                let error = error.replace(['\n', '\r'], " ");
                let error = error.replace([',', '"'], ";");
                writeln!(w, "{},,,,,,,,,{}", csv_safe(sequence_id)?, error)?;
            }
        }
    }
    Ok(())
}

pub fn read_features_csv(content: &str) -> Result<Vec<FeatureRow>, DatasetError> {
    let mut rows = Vec::new();
    for (line, fields) in parse_csv(content, FEATURES_KIND, &FEATURES_HEADERS)? {
        let sequence_id = fields[0].clone();
        if !fields[9].is_empty() {
            rows.push(FeatureRow::Failed {
                sequence_id,
                error: fields[9].clone(),
            });
            continue;
        }
        let framerate: Framerate = fields[3].parse().map_err(|e| DatasetError::Parse {
            line,
            message: format!("{e}"),
        })?;
        let features = SequenceFeatures {
            width: parse_num(&fields[1], "width", line)?,
            height: parse_num(&fields[2], "height", line)?,
            n_frames: parse_num(&fields[4], "n_frames", line)?,
            mse_ms: parse_num(&fields[5], "mse_ms", line)?,
            bpp_ms: parse_num(&fields[6], "bpp_ms", line)?,
            ip_ratio: parse_num(&fields[7], "ip_ratio", line)?,
            analysis_wall_time: parse_opt_f64(&fields[8], "analysis_wall_time", line)?
                .unwrap_or(0.0),
        };
        rows.push(FeatureRow::Ok {
            sequence_id,
            framerate,
            features,
        });
    }
    Ok(rows)
}

/// Ground-truth encoded size of one (sequence, preset, CRF) encode,
/// supplied externally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingRow {
    pub sequence_id: String,
    pub preset: u32,
    pub crf: u32,
    pub bits: u64,
    pub frame_count: u64,
}

pub fn write_encodings_csv<W: Write>(mut w: W, rows: &[EncodingRow]) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line(ENCODINGS_KIND))?;
    writeln!(w, "{}", ENCODINGS_HEADERS.join(","))?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            csv_safe(&row.sequence_id)?,
            row.preset,
            row.crf,
            row.bits,
            row.frame_count
        )?;
    }
    Ok(())
}

pub fn read_encodings_csv(content: &str) -> Result<Vec<EncodingRow>, DatasetError> {
    let mut rows = Vec::new();
    for (line, fields) in parse_csv(content, ENCODINGS_KIND, &ENCODINGS_HEADERS)? {
        rows.push(EncodingRow {
            sequence_id: fields[0].clone(),
            preset: parse_num(&fields[1], "preset", line)?,
            crf: parse_num(&fields[2], "crf", line)?,
            bits: parse_num(&fields[3], "bits", line)?,
            frame_count: parse_num(&fields[4], "frame_count", line)?,
        });
    }
    Ok(rows)
}

/// Externally computed spatial/temporal complexity for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct VcaRow {
    pub sequence_id: String,
    pub vca_spatial: f64,
    pub vca_temporal: f64,
}

pub fn write_vca_csv<W: Write>(mut w: W, rows: &[VcaRow]) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line(VCA_KIND))?;
    writeln!(w, "{}", VCA_HEADERS.join(","))?;
    for row in rows {
        writeln!(
            w,
            "{},{},{}",
            csv_safe(&row.sequence_id)?,
            fmt_f64(row.vca_spatial),
            fmt_f64(row.vca_temporal)
        )?;
    }
    Ok(())
}

pub fn read_vca_csv(content: &str) -> Result<Vec<VcaRow>, DatasetError> {
    let mut rows = Vec::new();
    for (line, fields) in parse_csv(content, VCA_KIND, &VCA_HEADERS)? {
        rows.push(VcaRow {
            sequence_id: fields[0].clone(),
            vca_spatial: parse_num(&fields[1], "vca_spatial", line)?,
            vca_temporal: parse_num(&fields[2], "vca_temporal", line)?,
        });
    }
    Ok(rows)
}

pub fn write_dataset_csv<W: Write>(mut w: W, rows: &[DatasetRow]) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line(DATASET_KIND))?;
    writeln!(w, "{}", DATASET_HEADERS.join(","))?;
    for row in rows {
        writeln!(w, "{}", dataset_row_fields(row)?.join(","))?;
    }
    Ok(())
}

fn dataset_row_fields(row: &DatasetRow) -> Result<Vec<String>, DatasetError> {
    Ok(vec![
        csv_safe(&row.sequence_id)?.to_owned(),
        row.preset.to_string(),
        row.crf.to_string(),
        row.width.to_string(),
        row.height.to_string(),
        row.frame_count.to_string(),
        fmt_f64(row.features.mse_ms),
        fmt_f64(row.features.bpp_ms),
        fmt_f64(row.features.ip_ratio),
        fmt_opt_f64(row.features.vca_spatial),
        fmt_opt_f64(row.features.vca_temporal),
        fmt_f64(row.target_bpp),
        row.target_bits.to_string(),
    ])
}

pub fn read_dataset_csv(content: &str) -> Result<Vec<DatasetRow>, DatasetError> {
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, fields) in parse_csv(content, DATASET_KIND, &DATASET_HEADERS)? {
        let crf = parse_num(&fields[2], "crf", line)?;
        let row = DatasetRow {
            sequence_id: fields[0].clone(),
            preset: parse_num(&fields[1], "preset", line)?,
            crf,
            width: parse_num(&fields[3], "width", line)?,
            height: parse_num(&fields[4], "height", line)?,
            frame_count: parse_num(&fields[5], "frame_count", line)?,
            features: FeatureVector {
                crf,
                mse_ms: parse_num(&fields[6], "mse_ms", line)?,
                bpp_ms: parse_num(&fields[7], "bpp_ms", line)?,
                ip_ratio: parse_num(&fields[8], "ip_ratio", line)?,
                vca_spatial: parse_opt_f64(&fields[9], "vca_spatial", line)?,
                vca_temporal: parse_opt_f64(&fields[10], "vca_temporal", line)?,
            },
            target_bpp: parse_num(&fields[11], "target_bpp", line)?,
            target_bits: parse_num(&fields[12], "target_bits", line)?,
        };
        row.validate().map_err(|e| DatasetError::Parse {
            line,
            message: e.to_string(),
        })?;
        if !seen.insert((row.sequence_id.clone(), row.preset, row.crf)) {
            return Err(DatasetError::Parse {
                line,
                message: format!(
                    "duplicate dataset key ({}, {}, {})",
                    row.sequence_id, row.preset, row.crf
                ),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// A row that could not be joined, with the side it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectRow {
    pub side: &'static str,
    pub sequence_id: String,
    pub preset: Option<u32>,
    pub crf: Option<u32>,
    pub reason: String,
}

pub fn write_rejects_csv<W: Write>(mut w: W, rows: &[RejectRow]) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line(REJECTS_KIND))?;
    writeln!(w, "{}", REJECTS_HEADERS.join(","))?;
    for row in rows {
        let reason = row.reason.replace(['\n', '\r'], " ").replace([',', '"'], ";");
        writeln!(
            w,
            "{},{},{},{},{}",
            row.side,
            csv_safe(&row.sequence_id)?,
            row.preset.map(|p| p.to_string()).unwrap_or_default(),
            row.crf.map(|c| c.to_string()).unwrap_or_default(),
            reason
        )?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct JoinOutcome {
    pub rows: Vec<DatasetRow>,
    pub rejects: Vec<RejectRow>,
}

/// Inner-joins features with externally measured encodings on
/// `sequence_id`; `target_bpp = bits / (width * height * frame_count)`.
/// Rows without a counterpart land in `rejects` instead of failing the
/// whole join.
pub fn join_dataset(
    features: &[FeatureRow],
    encodings: &[EncodingRow],
    vca: Option<&[VcaRow]>,
) -> Result<JoinOutcome, DatasetError> {
    let mut rejects = Vec::new();

    let mut feature_map: BTreeMap<&str, (&str, &SequenceFeatures)> = BTreeMap::new();
    for row in features {
        match row {
            FeatureRow::Failed { sequence_id, error } => rejects.push(RejectRow {
                side: "features",
                sequence_id: sequence_id.clone(),
                preset: None,
                crf: None,
                reason: format!("analysis failed: {error}"),
            }),
            FeatureRow::Ok {
                sequence_id,
                features,
                ..
            } => {
                if feature_map
                    .insert(sequence_id, (sequence_id, features))
                    .is_some()
                {
                    return Err(DatasetError::InvalidValue(format!(
                        "duplicate sequence_id `{sequence_id}` in features"
                    )));
                }
            }
        }
    }

    let mut vca_map: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    if let Some(vca) = vca {
        for row in vca {
            vca_map.insert(&row.sequence_id, (row.vca_spatial, row.vca_temporal));
        }
    }

    let mut rows: Vec<DatasetRow> = Vec::new();
    let mut keys = BTreeSet::new();
    let mut matched_features: BTreeSet<&str> = BTreeSet::new();
    for enc in encodings {
        let reject = |reason: String| RejectRow {
            side: "encodings",
            sequence_id: enc.sequence_id.clone(),
            preset: Some(enc.preset),
            crf: Some(enc.crf),
            reason,
        };
        let Some((_, features)) = feature_map.get(enc.sequence_id.as_str()) else {
            rejects.push(reject("no matching feature row".into()));
            continue;
        };
        if !keys.insert((enc.sequence_id.clone(), enc.preset, enc.crf)) {
            rejects.push(reject("duplicate (sequence_id, preset, crf) key".into()));
            continue;
        }
        if enc.bits == 0 || enc.frame_count == 0 {
            rejects.push(reject("bits and frame_count must be positive".into()));
            continue;
        }
        let pixels = u64::from(features.width) * u64::from(features.height) * enc.frame_count;
        let vca_features = vca_map.get(enc.sequence_id.as_str());
        let row = DatasetRow {
            sequence_id: enc.sequence_id.clone(),
            preset: enc.preset,
            crf: enc.crf,
            width: features.width,
            height: features.height,
            frame_count: enc.frame_count,
            features: FeatureVector {
                crf: enc.crf,
                bpp_ms: features.bpp_ms,
                mse_ms: features.mse_ms,
                ip_ratio: features.ip_ratio,
                vca_spatial: vca_features.map(|&(s, _)| s),
                vca_temporal: vca_features.map(|&(_, t)| t),
            },
            target_bpp: enc.bits as f64 / pixels as f64,
            target_bits: enc.bits,
        };
        match row.validate() {
            Ok(()) => {
                matched_features.insert(feature_map.get(enc.sequence_id.as_str()).unwrap().0);
                rows.push(row);
            }
            Err(e) => rejects.push(reject(e.to_string())),
        }
    }

    for (id, _) in feature_map.values() {
        if !matched_features.contains(id) {
            rejects.push(RejectRow {
                side: "features",
                sequence_id: (*id).to_owned(),
                preset: None,
                crf: None,
                reason: "no matching encoding rows".into(),
            });
        }
    }

    if rows.is_empty() {
        return Err(DatasetError::EmptyJoin);
    }
    Ok(JoinOutcome { rows, rejects })
}

pub fn write_predictions_csv<W: Write>(
    mut w: W,
    rows: &[(DatasetRow, f64)],
) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line(PREDICTIONS_KIND))?;
    writeln!(w, "{}", PREDICTIONS_HEADERS.join(","))?;
    for (row, predicted_bpp) in rows {
        let mut fields = dataset_row_fields(row)?;
        let relative_error = (predicted_bpp - row.target_bpp).abs() / row.target_bpp;
        fields.push(fmt_f64(*predicted_bpp));
        fields.push(fmt_f64(relative_error));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// One input of an analysis batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub framerate: Option<Framerate>,
}

pub fn write_manifest_csv<W: Write>(mut w: W, rows: &[ManifestEntry]) -> Result<(), DatasetError> {
    writeln!(w, "{}", schema_line(MANIFEST_KIND))?;
    writeln!(w, "{}", MANIFEST_HEADERS.join(","))?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            csv_safe(&row.path)?,
            row.width.map(|v| v.to_string()).unwrap_or_default(),
            row.height.map(|v| v.to_string()).unwrap_or_default(),
            row.framerate.map(|v| v.to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}

pub fn read_manifest_csv(content: &str) -> Result<Vec<ManifestEntry>, DatasetError> {
    let mut rows = Vec::new();
    for (line, fields) in parse_csv(content, MANIFEST_KIND, &MANIFEST_HEADERS)? {
        let parse_opt_u32 = |value: &str, name: &str| -> Result<Option<u32>, DatasetError> {
            if value.is_empty() {
                Ok(None)
            } else {
                parse_num::<u32>(value, name, line).map(Some)
            }
        };
        let framerate = if fields[3].is_empty() {
            None
        } else {
            Some(fields[3].parse::<Framerate>().map_err(|e| DatasetError::Parse {
                line,
                message: format!("{e}"),
            })?)
        };
        rows.push(ManifestEntry {
            path: fields[0].clone(),
            width: parse_opt_u32(&fields[1], "width")?,
            height: parse_opt_u32(&fields[2], "height")?,
            framerate,
        });
    }
    Ok(rows)
}
