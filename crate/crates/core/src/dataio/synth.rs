use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DataError, LabeledDataset};
use crate::featx::{FeatureKind, FeatureMatrix};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPreset {
    /// 62 channels × 5 bands, 3 classes × 300 rows.
    SeedLike,
    /// 32 channels × 4 bands, 4 classes × 150 rows.
    DeapLike,
}

/// Gaussian class mixture with a block (per-band) channel covariance.
///
/// Class means are `band_offset[b] + separation · u_c`, where the unit
/// offsets `u_c` lie in a random subspace of dimension `signal_rank`.
/// Within band `b` channels share the covariance
/// `band_scale[b]² · ((1 − ρ) I + ρ 11ᵀ)` with `ρ = band_correlation`,
/// unless `covariance_blocks` supplies explicit row-major blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub n_channels: usize,
    pub n_bands: usize,
    pub samples_per_class: usize,
    #[serde(default = "default_kind")]
    pub kind: FeatureKind,
    pub separation: f64,
    #[serde(default = "default_rank")]
    pub signal_rank: usize,
    #[serde(default)]
    pub band_correlation: f64,
    #[serde(default)]
    pub band_scale: Vec<f64>,
    #[serde(default)]
    pub band_offset: Vec<f64>,
    #[serde(default)]
    pub covariance_blocks: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
}

fn default_kind() -> FeatureKind {
    FeatureKind::De
}

fn default_rank() -> usize {
    4
}

impl SynthSpec {
    pub fn preset(p: SynthPreset, seed: u64) -> Self {
        let (n_classes, n_channels, n_bands, samples_per_class) = match p {
            SynthPreset::SeedLike => (3, 62, 5, 300),
            SynthPreset::DeapLike => (4, 32, 4, 150),
        };
        Self {
            n_classes,
            n_channels,
            n_bands,
            samples_per_class,
            kind: FeatureKind::De,
            separation: 3.0,
            signal_rank: 4,
            band_correlation: 0.6,
            band_scale: Vec::new(),
            band_offset: Vec::new(),
            covariance_blocks: None,
            seed,
        }
    }

    pub fn dims(&self) -> usize {
        self.n_channels * self.n_bands
    }

    fn band_scale(&self, b: usize) -> f64 {
        self.band_scale.get(b).copied().unwrap_or(1.0)
    }

    fn band_offset(&self, b: usize) -> f64 {
        self.band_offset.get(b).copied().unwrap_or(0.0)
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.n_classes == 0 || self.n_channels == 0 || self.n_bands == 0 {
            return Err(DataError::BadSpec("class, channel and band counts must be positive".into()));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(DataError::BadSpec(format!("separation {} must be finite and non-negative", self.separation)));
        }
        if self.signal_rank == 0 || self.signal_rank > self.dims() {
            return Err(DataError::BadSpec(format!("signal rank {} must be in 1..={}", self.signal_rank, self.dims())));
        }
        for (name, v) in [("band_scale", &self.band_scale), ("band_offset", &self.band_offset)] {
            if !v.is_empty() && v.len() != self.n_bands {
                return Err(DataError::BadSpec(format!("{name} needs {} entries", self.n_bands)));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(DataError::BadSpec(format!("{name} has a non-finite entry")));
            }
        }
        if let Some(blocks) = &self.covariance_blocks {
            if blocks.len() != self.n_bands || blocks.iter().any(|b| b.len() != self.n_channels * self.n_channels) {
                return Err(DataError::BadSpec(format!(
                    "covariance_blocks needs {} blocks of {}×{}",
                    self.n_bands, self.n_channels, self.n_channels
                )));
            }
        }
        Ok(())
    }

    fn block(&self, b: usize) -> Result<DMatrix<f64>, DataError> {
        let c = self.n_channels;
        let m = match &self.covariance_blocks {
            Some(blocks) => {
                let m = DMatrix::from_row_slice(c, c, &blocks[b]);
                if (&m - m.transpose()).amax() > 1e-12 {
                    return Err(DataError::NotPositiveDefinite { band: b });
                }
                m
            }
            None => {
                let s2 = self.band_scale(b).powi(2);
                let rho = self.band_correlation;
                DMatrix::from_fn(c, c, |i, j| if i == j { s2 } else { s2 * rho })
            }
        };
        Ok(m)
    }
}

/// Draws the dataset, class-major. Deterministic in `spec.seed`.
pub fn synth_generate(spec: &SynthSpec) -> Result<LabeledDataset, DataError> {
    spec.validate()?;
    let (c, nb, d) = (spec.n_channels, spec.n_bands, spec.dims());
    let mut factors = Vec::with_capacity(nb);
    for b in 0..nb {
        let chol = spec.block(b)?.cholesky().ok_or(DataError::NotPositiveDefinite { band: b })?;
        factors.push(chol.l());
    }
    let root = RngStream::new(spec.seed);
    let mut mean_rng = root.split_named("means");
    let basis: Vec<Vec<f64>> = (0..spec.signal_rank).map(|_| (0..d).map(|_| mean_rng.normal()).collect()).collect();
    let means: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| {
            let coef: Vec<f64> = (0..spec.signal_rank).map(|_| mean_rng.normal()).collect();
            let mut u = vec![0.0; d];
            for (k, a) in coef.iter().enumerate() {
                for (x, v) in u.iter_mut().zip(&basis[k]) {
                    *x += a * v;
                }
            }
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            (0..d).map(|j| spec.band_offset(j % nb) + spec.separation * u[j] / norm).collect()
        })
        .collect();

    let mut noise_rng = root.split_named("noise");
    let n = spec.n_classes * spec.samples_per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for (class, mu) in means.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            row.copy_from_slice(mu);
            for (b, l) in factors.iter().enumerate() {
                let z = DVector::from_fn(c, |_, _| noise_rng.normal());
                let e = l * z;
                for ch in 0..c {
                    row[ch * nb + b] += e[ch];
                }
            }
            data.extend_from_slice(&row);
            labels.push(class as u32);
        }
    }
    let features = FeatureMatrix::new(data, c, nb, spec.kind)?;
    LabeledDataset::new(features, labels, spec.n_classes as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_paper_layouts() {
        let s = synth_generate(&SynthSpec::preset(SynthPreset::SeedLike, 1)).unwrap();
        assert_eq!((s.dims(), s.rows(), s.n_classes()), (310, 900, 3));
        let d = synth_generate(&SynthSpec::preset(SynthPreset::DeapLike, 1)).unwrap();
        assert_eq!((d.dims(), d.rows(), d.class_counts()), (128, 600, vec![150; 4]));
    }

    #[test]
    fn deterministic_in_seed() {
        let mut spec = SynthSpec::preset(SynthPreset::DeapLike, 9);
        spec.samples_per_class = 5;
        assert_eq!(synth_generate(&spec).unwrap(), synth_generate(&spec).unwrap());
        let mut other = spec.clone();
        other.seed = 10;
        assert_ne!(synth_generate(&spec).unwrap(), synth_generate(&other).unwrap());
    }

    #[test]
    fn single_class_mean_within_clt_bound() {
        let spec = SynthSpec {
            n_classes: 1,
            n_channels: 4,
            n_bands: 2,
            samples_per_class: 4000,
            kind: FeatureKind::De,
            separation: 2.0,
            signal_rank: 1,
            band_correlation: 0.5,
            band_scale: vec![1.0, 2.0],
            band_offset: vec![5.0, -1.0],
            covariance_blocks: None,
            seed: 3,
        };
        let data = synth_generate(&spec).unwrap();
        // Recover the class mean from a noiseless draw.
        let mut clean = spec.clone();
        clean.band_scale = vec![1e-9, 1e-9];
        clean.samples_per_class = 1;
        let mu = synth_generate(&clean).unwrap().row(0).to_vec();
        let n = data.rows() as f64;
        for j in 0..spec.dims() {
            let mean = (0..data.rows()).map(|r| data.row(r)[j]).sum::<f64>() / n;
            let sigma = spec.band_scale[j % 2];
            assert!((mean - mu[j]).abs() < 3.0 * sigma / n.sqrt(), "dim {j}: {mean} vs {}", mu[j]);
        }
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let mut spec = SynthSpec::preset(SynthPreset::DeapLike, 0);
        spec.band_correlation = -0.5;
        assert!(matches!(synth_generate(&spec), Err(DataError::NotPositiveDefinite { band: 0 })));
        spec.band_correlation = 0.0;
        spec.n_channels = 2;
        spec.n_bands = 1;
        spec.signal_rank = 1;
        spec.covariance_blocks = Some(vec![vec![1.0, 2.0, 2.0, 1.0]]);
        assert!(matches!(synth_generate(&spec), Err(DataError::NotPositiveDefinite { band: 0 })));
    }
}
