//! Training-set augmentation: full and selective generative strategies,
//! Gaussian noise and rotational (RDA) baselines.

mod baselines;
mod full;
mod montage;
mod plan;
mod provenance;
mod selective;


pub use baselines::{gaussian_augment, rda_augment, rotate_z, RbfInterpolator};
pub use full::{augment_full, uniform_mix};
pub use montage::Montage;
pub use plan::{AugmentationPlan, Method, RdaAngle, DEFAULT_COUNTS};
pub use provenance::{read_sidecar, write_sidecar, Augmented, Provenance, SIDECAR_HEADER};
pub use selective::augment_selective;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("full augmentation needs a conditional generator")]
    Unconditional,
    #[error("invalid plan: {0}")]
    Config(String),
    #[error("cannot draw {0} rows from an empty dataset")]
    EmptySource(usize),
    #[error("montage has {montage} electrodes but the data has {channels} channels")]
    MontageMismatch { montage: usize, channels: usize },
    #[error("bad montage: {0}")]
    Montage(String),
    #[error("selective loop stopped after {rounds} rounds with {accepted} of {requested} rows accepted (acceptance rate {rate:.4})")]
    RoundsExhausted { accepted: usize, requested: usize, rounds: usize, rate: f64 },
    #[error(transparent)]
    Gen(#[from] crate::genmod::GenError),
    #[error(transparent)]
    Clf(#[from] crate::clf::ClfError),
    #[error(transparent)]
    Data(#[from] crate::dataio::DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
