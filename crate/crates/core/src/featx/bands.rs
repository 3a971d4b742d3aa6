use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Frequency band with inclusive whole-Hz edges: `low..=high`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

impl Band {
    pub fn new(name: &str, low: f64, high: f64) -> Self {
        Self {
            name: name.to_string(),
            low,
            high,
        }
    }

    pub fn contains(&self, freq: f64) -> bool {
        freq >= self.low && freq <= self.high
    }

    /// Number of 1 Hz bins covered, `high - low + 1`.
    pub fn width(&self) -> f64 {
        self.high - self.low + 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandScheme {
    bands: Vec<Band>,
}

impl BandScheme {
    pub fn new(bands: Vec<Band>) -> Result<Self, FeatureError> {
        if bands.is_empty() {
            return Err(FeatureError::BadScheme("no bands".into()));
        }
        for b in &bands {
            if !(b.low.is_finite() && b.high.is_finite()) || b.low < 0.0 || b.high < b.low {
                return Err(FeatureError::BadScheme(format!("band {} has edges {}..{}", b.name, b.low, b.high)));
            }
        }
        for pair in bands.windows(2) {
            if pair[1].low <= pair[0].high {
                return Err(FeatureError::BadScheme(format!("bands {} and {} overlap or are out of order", pair[0].name, pair[1].name)));
            }
        }
        Ok(Self { bands })
    }

    /// δ 1–3, θ 4–7, α 8–13, β 14–30, γ 31–50 Hz.
    pub fn seed5() -> Self {
        Self {
            bands: vec![
                Band::new("delta", 1.0, 3.0),
                Band::new("theta", 4.0, 7.0),
                Band::new("alpha", 8.0, 13.0),
                Band::new("beta", 14.0, 30.0),
                Band::new("gamma", 31.0, 50.0),
            ],
        }
    }

    /// SEED-5 without δ.
    pub fn deap4() -> Self {
        let mut s = Self::seed5();
        s.bands.remove(0);
        s
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "seed5" | "seed-5" | "seed" => Some(Self::seed5()),
            "deap4" | "deap-4" | "deap" => Some(Self::deap4()),
            _ => None,
        }
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn highest_edge(&self) -> f64 {
        self.bands.last().map_or(0.0, |b| b.high)
    }
}
