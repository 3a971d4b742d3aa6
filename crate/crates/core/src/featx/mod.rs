//! Spectral EEG features: windowed band power, differential entropy and
//! linear-dynamic-system smoothing.

mod bands;
mod lds;
mod matrix;
mod spectral;

pub use bands::{Band, BandScheme};
pub use lds::{lds_smooth, lds_smooth_matrix, DEFAULT_LDS_RATIO};
pub use matrix::{FeatureKind, FeatureMatrix};
pub use spectral::{de_extract, de_features, hann_periodogram, psd_extract};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("signal has {len} samples per channel; at least one {window}-sample window is required")]
    TooShort { len: usize, window: usize },
    #[error("sampling rate {fs} Hz must exceed twice the highest band edge ({edge} Hz)")]
    Nyquist { fs: f64, edge: f64 },
    #[error("sampling rate {0} Hz must be a positive whole number of samples per second")]
    BadRate(f64),
    #[error("channels have unequal lengths")]
    RaggedChannels,
    #[error("no channels supplied")]
    NoChannels,
    #[error("window needs at least 2 samples, got {0}")]
    WindowTooSmall(usize),
    #[error("zero variance in series {0}; differential entropy is undefined")]
    ZeroVariance(usize),
    #[error("zero band power at channel {channel}, band {band}")]
    ZeroPower { channel: usize, band: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("noise ratio must be positive, got {0}")]
    BadRatio(f64),
    #[error("invalid band scheme: {0}")]
    BadScheme(String),
    #[error("feature matrix shape error: {0}")]
    Shape(String),
}
