//! Datasets on disk and in memory: the EAFX binary container, CSV
//! interchange, synthetic stand-in datasets, quadrant labels and z-scoring.

mod csvio;
mod dataset;
mod format;
mod normalize;
mod quadrant;
mod synth;

pub use csvio::{read_csv, write_csv};
pub use dataset::LabeledDataset;
pub use format::{decode_features, encode_features, load_features, save_features, EAFX_MAGIC, EAFX_VERSION};
pub use normalize::Normalizer;
pub use quadrant::{deap_quadrant, Quadrant};
pub use synth::{synth_generate, SynthPreset, SynthSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("byte {offset}: {msg}")]
    Format { offset: usize, msg: String },
    #[error("label {label} at row {row} is not below the class count {arity}")]
    LabelOutOfRange { row: usize, label: u32, arity: u32 },
    #[error("{labels} labels for {rows} rows")]
    LabelCount { rows: usize, labels: usize },
    #[error("dataset has no labels")]
    Unlabeled,
    #[error("covariance block for band {band} is not positive definite")]
    NotPositiveDefinite { band: usize },
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("rating {0} is outside [1, 9]")]
    BadRating(f64),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Feature(#[from] crate::featx::FeatureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DataError {
    fn format(offset: usize, msg: impl Into<String>) -> Self {
        DataError::Format { offset, msg: msg.into() }
    }
}
