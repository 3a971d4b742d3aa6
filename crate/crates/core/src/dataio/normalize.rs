use serde::{Deserialize, Serialize};

use crate::featx::FeatureMatrix;

/// Per-dimension z-score fitted on training rows.
///
/// Dimensions with zero spread are centred but not scaled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Normalizer {
    /// Population mean and standard deviation of each column.
    pub fn fit(rows: &FeatureMatrix) -> Self {
        let d = rows.dims();
        let n = rows.rows();
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        if n == 0 {
            return Self { mean, std };
        }
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(rows.row(r)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        for r in 0..n {
            for ((s, v), m) in std.iter_mut().zip(rows.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n as f64).sqrt();
        }
        Self { mean, std }
    }

    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> Self {
        assert_eq!(mean.len(), std.len());
        Self { mean, std }
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    fn scale(&self, j: usize) -> f64 {
        if self.std[j] > 0.0 {
            self.std[j]
        } else {
            1.0
        }
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.mean[j]) / self.scale(j);
        }
    }

    pub fn inverse_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = *v * self.scale(j) + self.mean[j];
        }
    }

    pub fn transform(&self, m: &FeatureMatrix) -> FeatureMatrix {
        let mut out = m.clone();
        for r in 0..out.rows() {
            self.transform_row(out.row_mut(r));
        }
        out
    }

    pub fn inverse(&self, m: &FeatureMatrix) -> FeatureMatrix {
        let mut out = m.clone();
        for r in 0..out.rows() {
            self.inverse_row(out.row_mut(r));
        }
        out
    }
}
