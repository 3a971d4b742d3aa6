//! VAE, cVAE, WGAN-GP and cWGAN generators over feature vectors.
//!
//! Networks are ReLU MLPs recorded on a [`Tape`](crate::diffcore::Tape)
//! per step. Conditioning appends a one-hot label to the generator, critic,
//! encoder and decoder inputs.

mod checkpoint;
mod losses;
mod mlp;
mod model;
mod train;


pub use checkpoint::{Checkpoint, ModelTag, EAGM_MAGIC, EAGM_VERSION};
pub use losses::{gradient_penalty, interpolate, kl_diag_gaussian, kl_diag_gaussian_value, one_hot, vae_objective};
pub use mlp::{Bound, InitScheme, Mlp, MlpSpec, OutputActivation};
pub use model::{cvae_loss, vae_loss, Architecture, CriticLoss, GanModel, GenerativeModel, ModelKind, Network, VaeModel, VaePass};
pub use train::{sample, train, LossTrace, TrainConfig};

use thiserror::Error;

use crate::diffcore::DiffError;

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("label {label} at row {row} is outside 0..{n_classes}")]
    Label { row: usize, label: u32, n_classes: usize },
    #[error("interpolation weight {0} is outside [0, 1]")]
    Alpha(f64),
    #[error("batch of {0} rows; at least 2 are required")]
    BatchTooSmall(usize),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("model is unconditional but labels were supplied")]
    Unconditional,
    #[error("conditional model requires labels")]
    NeedsLabels,
    #[error("training set is empty")]
    EmptyData,
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint byte {offset}: {msg}")]
    Checkpoint { offset: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
