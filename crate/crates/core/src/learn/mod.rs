//! Predictors trained on previously solved variations of one base system.
//!
//! * [`predict_transmission`]: flow limits that were binding for the nearest
//!   training variations.
//! * [`predict_warm_start`]: commitment values the nearest variations agree on.
//! * [`AffinePredictor`]: per-hyperplane gates backed by linear SVMs and
//!   cross-validated precision/recall.

mod affine;
mod knn;
mod store;
mod svm;

use thiserror::Error;

pub use affine::{
    candidate_hyperplanes, extract_features, fit_affine_predictor, parse_predictor, AffineGateConfig, AffinePredictor,
    Gate, GateDecision, GateParams, FEATURE_COUNT,
};
pub use knn::{
    knn_indices, predict_transmission, predict_warm_start, Normalizer,
    TransmissionPredictorConfig, WarmStartMode, WarmStartPredictorConfig,
};
pub use store::{
    fingerprint, parse_manifest, parse_sample, SampleDocument, StoreManifest, TrainingRecord,
    TrainingStore, STORE_FORMAT,
};
pub use svm::{
    kfold_evaluate, precision_recall, svm_objective, svm_train, Classifier, CvResult, SvmModel,
};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("the training store is empty")]
    EmptyStore,
    #[error("k = {k} is outside 1..={available}")]
    BadK { k: usize, available: usize },
    #[error("invalid predictor setting: {0}")]
    Config(String),
    #[error("dimension mismatch: {found} values where {expected} were expected")]
    Dimension { found: usize, expected: usize },
    #[error("labels must be -1 or 1 and include both classes")]
    Labels,
    #[error("base system fingerprint {found} does not match {expected}")]
    Fingerprint { expected: String, found: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported store format {0:?}")]
    Format(String),
    #[error("sample {index}: {reason}")]
    Sample { index: usize, reason: String },
    #[error(transparent)]
    Sampling(#[from] crate::sampling::SamplingError),
}
