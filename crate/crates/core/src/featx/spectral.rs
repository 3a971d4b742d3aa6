use std::f64::consts::{E, PI};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{BandScheme, FeatureError, FeatureKind, FeatureMatrix};

fn hann(n: usize) -> Vec<f64> {
    // Periodic Hann.
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// One-sided Hann periodogram, bins `0..=N/2`, scaled as
/// `|X_k|² / Σ w²` so that unit-variance white noise has expected power 1 per bin.
pub fn hann_periodogram(window: &[f64]) -> Vec<f64> {
    let n = window.len();
    let w = hann(n);
    let norm: f64 = w.iter().map(|v| v * v).sum();
    let mut buf: Vec<Complex<f64>> = window.iter().zip(&w).map(|(x, w)| Complex::new(x * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm_sqr() / norm).collect()
}

fn window_len(signal: &[Vec<f64>], fs: f64, scheme: &BandScheme) -> Result<usize, FeatureError> {
    if signal.is_empty() {
        return Err(FeatureError::NoChannels);
    }
    if !(fs.is_finite() && fs >= 1.0 && fs.fract() == 0.0) {
        return Err(FeatureError::BadRate(fs));
    }
    if fs <= 2.0 * scheme.highest_edge() {
        return Err(FeatureError::Nyquist { fs, edge: scheme.highest_edge() });
    }
    let len = signal[0].len();
    if signal.iter().any(|c| c.len() != len) {
        return Err(FeatureError::RaggedChannels);
    }
    let n = fs as usize;
    if len < n {
        return Err(FeatureError::TooShort { len, window: n });
    }
    for ch in signal {
        if let Some(i) = ch.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(i));
        }
    }
    Ok(n)
}

/// Per-window, per-channel, per-band periodogram bins, `[window][channel][band] -> bins`.
fn band_bins(signal: &[Vec<f64>], fs: f64, scheme: &BandScheme) -> Result<Vec<Vec<Vec<Vec<f64>>>>, FeatureError> {
    let n = window_len(signal, fs, scheme)?;
    let windows = signal[0].len() / n;
    let df = fs / n as f64;
    let mut out = Vec::with_capacity(windows);
    for w in 0..windows {
        let mut per_channel = Vec::with_capacity(signal.len());
        for ch in signal {
            let p = hann_periodogram(&ch[w * n..(w + 1) * n]);
            let bands = scheme
                .bands()
                .iter()
                .map(|b| p.iter().enumerate().filter(|(k, _)| b.contains(*k as f64 * df)).map(|(_, &v)| v).collect())
                .collect();
            per_channel.push(bands);
        }
        out.push(per_channel);
    }
    Ok(out)
}

/// Band power of each nonoverlapping one-second Hann window.
///
/// Band power is the variance carried by the band, `(2/N) Σ_{k∈band} P_k`,
/// so white noise yields powers proportional to band widths. One output row
/// per window.
pub fn psd_extract(signal: &[Vec<f64>], fs: f64, scheme: &BandScheme) -> Result<FeatureMatrix, FeatureError> {
    let bins = band_bins(signal, fs, scheme)?;
    let n = fs;
    let mut data = Vec::with_capacity(bins.len() * signal.len() * scheme.len());
    for window in &bins {
        for channel in window {
            for band in channel {
                data.push(2.0 / n * band.iter().sum::<f64>());
            }
        }
    }
    FeatureMatrix::new(data, signal.len(), scheme.len(), FeatureKind::Psd)
}

/// Differential entropy through the spectral route: `½ ln(2πe · P̄)` with
/// `P̄` the mean periodogram power over the band's bins. For band-limited
/// Gaussian segments this is the log spectral energy up to a per-band
/// constant, and unit white noise maps to `½ ln(2πe)` in every band.
pub fn de_features(signal: &[Vec<f64>], fs: f64, scheme: &BandScheme) -> Result<FeatureMatrix, FeatureError> {
    let bins = band_bins(signal, fs, scheme)?;
    let mut data = Vec::with_capacity(bins.len() * signal.len() * scheme.len());
    for window in &bins {
        for (c, channel) in window.iter().enumerate() {
            for (b, band) in channel.iter().enumerate() {
                let mean = band.iter().sum::<f64>() / band.len().max(1) as f64;
                if mean <= 0.0 || band.is_empty() {
                    return Err(FeatureError::ZeroPower { channel: c, band: b });
                }
                data.push(0.5 * (2.0 * PI * E * mean).ln());
            }
        }
    }
    FeatureMatrix::new(data, signal.len(), scheme.len(), FeatureKind::De)
}

/// `½ ln(2πe σ̂²)` for each series, with `σ̂²` the unbiased sample variance.
pub fn de_extract(window: &[Vec<f64>]) -> Result<Vec<f64>, FeatureError> {
    window
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if x.len() < 2 {
                return Err(FeatureError::WindowTooSmall(x.len()));
            }
            if let Some(j) = x.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite(j));
            }
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            if var <= 0.0 {
                return Err(FeatureError::ZeroVariance(i));
            }
            Ok(0.5 * (2.0 * PI * E * var).ln())
        })
        .collect()
}
