use serde::{Deserialize, Serialize};

use crate::augment::{AugmentationPlan, Method, Montage, RdaAngle};
use crate::clf::{ClassifierKind, ClassifierSpec, DnnConfig, SearchSpace, SvmConfig};
use crate::featx::FeatureMatrix;
use crate::genmod::{Architecture, ModelKind, TrainConfig};

/// Everything a cell needs besides its coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub folds: usize,
    pub svm: SvmConfig,
    pub dnn: DnnConfig,
    pub dnn_search: Option<SearchSpace>,
    /// GAN schedule; its seed is replaced per fold.
    pub gan: TrainConfig,
    pub vae: TrainConfig,
    /// Generator hidden widths; three layers of 256 when unset.
    pub gen_hidden: Option<Vec<usize>>,
    pub latent_dim: Option<usize>,
    pub lambda_gp: f64,
    pub n_critic: usize,
    pub threshold: f64,
    pub max_rounds: usize,
    pub candidates: Option<usize>,
    pub retrain_each_round: bool,
    /// Classifier used inside the selective loop; the cell's own when unset.
    pub selective_classifier: Option<ClassifierKind>,
    pub sigma: f64,
    pub rda_angle: RdaAngle,
    /// Electrode layout for RDA; a bundled one is chosen by channel count.
    #[serde(skip)]
    pub montage: Option<Montage>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            folds: 5,
            svm: SvmConfig::default(),
            dnn: DnnConfig::default(),
            dnn_search: None,
            gan: TrainConfig::gan_default(0),
            vae: TrainConfig::vae_default(0),
            gen_hidden: None,
            latent_dim: None,
            lambda_gp: 10.0,
            n_critic: 5,
            threshold: 0.9,
            max_rounds: 50,
            candidates: None,
            retrain_each_round: false,
            selective_classifier: None,
            sigma: 0.001,
            rda_angle: RdaAngle::default(),
            montage: None,
        }
    }
}

impl EvalSettings {
    pub fn classifier(&self, kind: ClassifierKind) -> ClassifierSpec {
        ClassifierSpec {
            kind,
            svm: self.svm.clone(),
            dnn: self.dnn.clone(),
            dnn_search: self.dnn_search.clone(),
        }
    }

    pub fn plan(&self, method: Method, count: usize) -> AugmentationPlan {
        let mut p = AugmentationPlan::new(method, count);
        if method.is_selective() {
            p.threshold = Some(self.threshold);
            p.max_rounds = Some(self.max_rounds);
            p.candidates = self.candidates;
            p.retrain_each_round = self.retrain_each_round;
        }
        if method == Method::Gau {
            p.sigma = Some(self.sigma);
        }
        if method == Method::Rda {
            p.angle = Some(self.rda_angle);
        }
        p
    }

    pub fn architecture(&self, kind: ModelKind, like: &FeatureMatrix, n_classes: usize) -> Architecture {
        let mut a = Architecture::default_for(kind, like.n_channels(), like.n_bands(), n_classes);
        a.feature_kind = like.kind();
        if let Some(h) = &self.gen_hidden {
            a.hidden = h.clone();
        }
        if let Some(l) = self.latent_dim {
            a.latent_dim = l;
        }
        a.lambda_gp = self.lambda_gp;
        a.n_critic = self.n_critic;
        a
    }

    pub fn schedule(&self, kind: ModelKind, seed: u64) -> TrainConfig {
        let base = if kind.is_gan() { &self.gan } else { &self.vae };
        TrainConfig { seed, ..base.clone() }
    }
}
