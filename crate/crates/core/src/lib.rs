//! Generative data augmentation for spectral EEG feature vectors.
//!
//! The numeric core ([`diffcore`], [`genmod`], the DNN in [`clf`]) is generic
//! over [`Scalar`]; 32-bit aliases are the training default and 64-bit
//! aliases back the gradient checks.

pub mod augment;
pub mod clf;
pub mod dataio;
pub mod diffcore;
pub mod evalx;
pub mod featx;
pub mod genmod;
pub mod rng;
mod scalar;

#[cfg(test)]
pub(crate) mod testutil;

pub use scalar::Scalar;

pub type Tensor32 = diffcore::Tensor<f32>;
pub type Tensor64 = diffcore::Tensor<f64>;
pub type Tape32 = diffcore::Tape<f32>;
pub type Tape64 = diffcore::Tape<f64>;

/// Writes `bytes` to `path` through a temporary sibling file and a rename,
/// so readers never observe a partial file.
pub fn atomic_write(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => std::path::Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
