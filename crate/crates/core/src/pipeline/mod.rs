//! Glue between raw surrogate scores and the network: quartile
//! discretization, ground-truth targets, and output calibration.

mod binning;
mod calibration;
mod targets;

pub use binning::{fit_quartile_bins, score_column, QuartileBinner, QuartileBins};
pub use calibration::{
    bag_seeds, fit_calibrator, fit_isotonic, Calibrator, CalibratorSet, IsotonicMap, DEFAULT_BAGS,
};
pub use targets::{
    binarize_symptom, condition_target, dsm_targets, DsmTargets, Scale, TargetLabel,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("need at least {needed} values, got {found}")]
    TooFewValues { needed: usize, found: usize },
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("{what} {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("no bins for surrogate `{0}`")]
    UnknownSurrogate(String),
    #[error("no calibrator for `{0}`")]
    UnknownCondition(String),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
