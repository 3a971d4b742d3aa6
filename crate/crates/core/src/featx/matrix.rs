use serde::{Deserialize, Serialize};

use super::FeatureError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Psd,
    De,
}

impl FeatureKind {
    pub fn code(self) -> u8 {
        match self {
            FeatureKind::Psd => 0,
            FeatureKind::De => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FeatureKind::Psd),
            1 => Some(FeatureKind::De),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Psd => "psd",
            FeatureKind::De => "de",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "psd" => Ok(FeatureKind::Psd),
            "de" => Ok(FeatureKind::De),
            other => Err(format!("unknown feature kind `{other}` (expected psd or de)")),
        }
    }
}

/// Samples × (channels · bands) matrix, channel-major:
/// `dim = channel · n_bands + band`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    n_channels: usize,
    n_bands: usize,
    kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, n_channels: usize, n_bands: usize, kind: FeatureKind) -> Result<Self, FeatureError> {
        let dims = n_channels * n_bands;
        if dims == 0 {
            return Err(FeatureError::Shape("layout must have at least one channel and band".into()));
        }
        if !data.len().is_multiple_of(dims) {
            return Err(FeatureError::Shape(format!("{} values do not fill rows of {dims}", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(i));
        }
        Ok(Self {
            rows: data.len() / dims,
            data,
            n_channels,
            n_bands,
            kind,
        })
    }

    pub fn empty(n_channels: usize, n_bands: usize, kind: FeatureKind) -> Self {
        Self::new(Vec::new(), n_channels, n_bands, kind).expect("valid layout")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.n_channels * self.n_bands
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dims();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.dims();
        &mut self.data[i * d..(i + 1) * d]
    }

    pub fn get(&self, row: usize, dim: usize) -> f64 {
        self.data[row * self.dims() + dim]
    }

    pub fn dim_index(&self, channel: usize, band: usize) -> usize {
        debug_assert!(channel < self.n_channels && band < self.n_bands);
        channel * self.n_bands + band
    }

    pub fn channel_band(&self, dim: usize) -> (usize, usize) {
        (dim / self.n_bands, dim % self.n_bands)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<(), FeatureError> {
        if row.len() != self.dims() {
            return Err(FeatureError::Shape(format!("row has {} values, expected {}", row.len(), self.dims())));
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(self.data.len() + i));
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.dims());
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            rows: idx.len(),
            n_channels: self.n_channels,
            n_bands: self.n_bands,
            kind: self.kind,
        }
    }

    /// Appends all rows of `other`, which must share the layout.
    pub fn extend(&mut self, other: &FeatureMatrix) -> Result<(), FeatureError> {
        if other.n_channels != self.n_channels || other.n_bands != self.n_bands {
            return Err(FeatureError::Shape(format!(
                "layout {}x{} does not match {}x{}",
                other.n_channels, other.n_bands, self.n_channels, self.n_bands
            )));
        }
        self.data.extend_from_slice(&other.data);
        self.rows += other.rows;
        Ok(())
    }

    pub fn with_kind(mut self, kind: FeatureKind) -> Self {
        self.kind = kind;
        self
    }
}
