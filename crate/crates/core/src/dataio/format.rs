//! EAFX feature container, little-endian:
//!
//! ```text
//! 0   magic "EAFX"
//! 4   u16 version (1)
//! 6   u8  feature kind (0 psd, 1 de)
//! 7   u8  reserved, 0
//! 8   u32 n_samples
//! 12  u32 n_channels
//! 16  u32 n_bands
//! 20  u32 label arity (0 = unlabeled)
//! 24  u32 FNV-1a checksum of bytes 0..24
//! 28  f32 payload, n_samples × n_channels × n_bands, row-major
//!     u32 labels, n_samples entries, present iff arity > 0
//! ```

use std::path::Path;

use super::{DataError, LabeledDataset};
use crate::featx::{FeatureKind, FeatureMatrix};

pub const EAFX_MAGIC: &[u8; 4] = b"EAFX";
pub const EAFX_VERSION: u16 = 1;
const HEADER_LEN: usize = 28;

fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Serializes `data`. Values are stored as `f32`.
pub fn encode_features(data: &LabeledDataset) -> Vec<u8> {
    let m = data.features();
    let mut out = Vec::with_capacity(HEADER_LEN + m.data().len() * 4 + data.rows() * 4);
    out.extend_from_slice(EAFX_MAGIC);
    out.extend_from_slice(&EAFX_VERSION.to_le_bytes());
    out.push(m.kind().code());
    out.push(0);
    for v in [m.rows(), m.n_channels(), m.n_bands(), data.n_classes() as usize] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let sum = fnv1a32(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    for &v in m.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    if let Some(labels) = data.labels() {
        for &l in labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn decode_features(bytes: &[u8]) -> Result<LabeledDataset, DataError> {
    if bytes.len() < HEADER_LEN {
        return Err(DataError::format(bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if &bytes[0..4] != EAFX_MAGIC {
        return Err(DataError::format(0, "bad magic, not an EAFX file"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != EAFX_VERSION {
        return Err(DataError::format(4, format!("unsupported version {version}")));
    }
    let kind = FeatureKind::from_code(bytes[6]).ok_or_else(|| DataError::format(6, format!("unknown feature kind {}", bytes[6])))?;
    if bytes[7] != 0 {
        return Err(DataError::format(7, "reserved byte is not zero"));
    }
    let expected = fnv1a32(&bytes[..24]);
    if u32_at(bytes, 24) != expected {
        return Err(DataError::format(24, "header checksum mismatch"));
    }
    let rows = u32_at(bytes, 8) as usize;
    let channels = u32_at(bytes, 12) as usize;
    let bands = u32_at(bytes, 16) as usize;
    let arity = u32_at(bytes, 20);
    if channels == 0 || bands == 0 {
        return Err(DataError::format(12, "channel and band counts must be positive"));
    }
    let n_values = rows
        .checked_mul(channels)
        .and_then(|v| v.checked_mul(bands))
        .ok_or_else(|| DataError::format(8, "sample count overflows"))?;
    let label_bytes = if arity > 0 { rows * 4 } else { 0 };
    let total = HEADER_LEN + n_values * 4 + label_bytes;
    if bytes.len() < total {
        return Err(DataError::format(bytes.len(), format!("truncated payload, expected {total} bytes")));
    }
    if bytes.len() > total {
        return Err(DataError::format(total, format!("{} trailing bytes", bytes.len() - total)));
    }
    let mut values = Vec::with_capacity(n_values);
    for i in 0..n_values {
        let at = HEADER_LEN + i * 4;
        let v = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        if !v.is_finite() {
            return Err(DataError::format(at, "non-finite feature value"));
        }
        values.push(f64::from(v));
    }
    let features = FeatureMatrix::new(values, channels, bands, kind)?;
    if arity == 0 {
        return Ok(LabeledDataset::unlabeled(features));
    }
    let base = HEADER_LEN + n_values * 4;
    let mut labels = Vec::with_capacity(rows);
    for r in 0..rows {
        let l = u32_at(bytes, base + r * 4);
        if l >= arity {
            return Err(DataError::format(base + r * 4, format!("label {l} at row {r} is not below arity {arity}")));
        }
        labels.push(l);
    }
    LabeledDataset::new(features, labels, arity)
}

/// Writes atomically through a temporary file in the target directory.
pub fn save_features(path: &Path, data: &LabeledDataset) -> Result<(), DataError> {
    crate::atomic_write(path, &encode_features(data))?;
    Ok(())
}

pub fn load_features(path: &Path) -> Result<LabeledDataset, DataError> {
    decode_features(&std::fs::read(path)?)
}
