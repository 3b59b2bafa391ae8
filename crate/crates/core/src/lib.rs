//! Motion-search video complexity analysis and bitrate prediction.
//!
//! The pipeline decodes raw video into luma frames, runs a lightweight
//! block analysis (spatial search on intra frames, exhaustive integer-pel
//! motion search on inter frames), aggregates the per-block errors and
//! bit estimates into sequence-level complexity descriptors, and fits
//! regression models that predict the encoded bits per pixel of a real
//! encoder run from those descriptors alone.
//!
//! Modules:
//!
//! - [`frame`], [`io`]: luma frames and the Y4M / raw YUV 4:2:0 readers.
//! - [`motion`]: block variances, motion search, block classification.
//! - [`descriptors`]: per-sequence complexity descriptors.
//! - [`regression`]: the per-CRF power-law model and the random forest.
//! - [`eval`]: MAPE/PCC metrics, grouped 5-fold cross-validation,
//!   correlation reports.
//! - [`dataset`]: CSV schemas and the feature/encoding join.
//! - [`synth`]: deterministic synthetic sequences and pseudo targets.

pub mod dataset;
pub mod descriptors;
pub mod eval;
pub mod frame;
pub mod io;
pub mod motion;
pub mod regression;
pub mod synth;

pub use dataset::{DatasetRow, FeatureVector};
pub use descriptors::SequenceFeatures;
pub use frame::{Framerate, LumaFrame, VideoMeta};
pub use motion::{AnalysisConfig, BlockRecord, FrameStats, MotionVector};
pub use regression::{BitrateModel, ForestModel, ModelKind, PolyModel};
