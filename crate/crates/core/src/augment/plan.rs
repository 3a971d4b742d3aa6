use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::genmod::ModelKind;

/// Sweep counts used when none are given.
pub const DEFAULT_COUNTS: [usize; 9] = [0, 200, 500, 1000, 3000, 5000, 10000, 15000, 20000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cwgan,
    Cvae,
    Swgan,
    Svae,
    Gau,
    Rda,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Cwgan, Method::Cvae, Method::Swgan, Method::Svae, Method::Gau, Method::Rda];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cwgan => "cwgan",
            Method::Cvae => "cvae",
            Method::Swgan => "swgan",
            Method::Svae => "svae",
            Method::Gau => "gau",
            Method::Rda => "rda",
        }
    }

    pub fn is_selective(self) -> bool {
        matches!(self, Method::Swgan | Method::Svae)
    }

    /// Generator family behind the method; selective methods use the
    /// unconditional model and label rows with the classifier.
    pub fn generator(self) -> Option<ModelKind> {
        match self {
            Method::Cwgan => Some(ModelKind::Cwgan),
            Method::Cvae => Some(ModelKind::Cvae),
            Method::Swgan => Some(ModelKind::Wgan),
            Method::Svae => Some(ModelKind::Vae),
            Method::Gau | Method::Rda => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let l = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == l)
            .ok_or_else(|| format!("unknown method `{s}` (expected one of cwgan, cvae, swgan, svae, gau, rda)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdaAngle {
    /// One angle for every row, in degrees.
    Fixed(f64),
    /// A fresh uniform draw per row, in degrees.
    Uniform { low: f64, high: f64 },
}

impl Default for RdaAngle {
    fn default() -> Self {
        RdaAngle::Fixed(18.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationPlan {
    pub method: Method,
    pub n_append: usize,
    /// Selective only: rows need confidence strictly above this.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    /// Selective only: candidates per round; `max(2n, 2000)` when unset.
    #[serde(default)]
    pub candidates: Option<usize>,
    /// Selective only: retrain the generator every round.
    #[serde(default)]
    pub retrain_each_round: bool,
    /// Gau only, in normalized units.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// RDA only.
    #[serde(default)]
    pub angle: Option<RdaAngle>,
}

impl AugmentationPlan {
    /// Plan with the default settings of `method`.
    pub fn new(method: Method, n_append: usize) -> Self {
        let selective = method.is_selective();
        Self {
            method,
            n_append,
            threshold: selective.then_some(0.9),
            max_rounds: selective.then_some(50),
            candidates: None,
            retrain_each_round: false,
            sigma: (method == Method::Gau).then_some(0.001),
            angle: (method == Method::Rda).then(RdaAngle::default),
        }
    }

    pub fn with_threshold(mut self, t: f64) -> Self {
        self.threshold = Some(t);
        self
    }

    pub fn with_max_rounds(mut self, r: usize) -> Self {
        self.max_rounds = Some(r);
        self
    }

    pub fn candidates_per_round(&self) -> usize {
        self.candidates.unwrap_or((2 * self.n_append).max(2000))
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: String| Err(AugmentError::Config(m));
        if self.method.is_selective() {
            match self.threshold {
                Some(t) if t > 0.0 && t <= 1.0 => {}
                Some(t) => return bad(format!("threshold {t} is outside (0, 1]")),
                None => return bad("selective plans need a threshold".into()),
            }
            match self.max_rounds {
                Some(r) if r > 0 => {}
                _ => return bad("selective plans need max_rounds >= 1".into()),
            }
            if self.candidates == Some(0) {
                return bad("candidate batch must be nonempty".into());
            }
        }
        if self.method == Method::Gau {
            match self.sigma {
                Some(s) if s.is_finite() && s >= 0.0 => {}
                _ => return bad("Gaussian noise needs a finite sigma >= 0".into()),
            }
        }
        if self.method == Method::Rda {
            match self.angle {
                Some(RdaAngle::Fixed(a)) if (-180.0..=180.0).contains(&a) => {}
                Some(RdaAngle::Uniform { low, high }) if -180.0 <= low && low <= high && high <= 180.0 => {}
                _ => return bad("rotation angle must lie in [-180, 180] degrees".into()),
            }
        }
        Ok(())
    }
}
