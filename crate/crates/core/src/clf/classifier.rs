use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dnn::{dnn_train, DnnConfig, ShortcutDnn};
use super::search::{random_search, SearchSpace};
use super::svm::{stratified_split, svm_confidence, svm_train, SvmConfig, SvmModel};
use super::ClfError;
use crate::dataio::{LabeledDataset, Normalizer};
use crate::diffcore::ParamSet;
use crate::featx::FeatureMatrix;
use crate::genmod::{Checkpoint, ModelTag};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Dnn,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Dnn => "dnn",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "dnn" => Ok(ClassifierKind::Dnn),
            other => Err(format!("unknown classifier `{other}` (expected svm or dnn)")),
        }
    }
}

/// How to train a classifier of either kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub svm: SvmConfig,
    #[serde(default)]
    pub dnn: DnnConfig,
    /// When set, DNN hyperparameters come from a random search on a
    /// stratified 80/20 split of the training rows.
    #[serde(default)]
    pub dnn_search: Option<SearchSpace>,
}

impl ClassifierSpec {
    pub fn svm() -> Self {
        Self {
            kind: ClassifierKind::Svm,
            svm: SvmConfig::default(),
            dnn: DnnConfig::default(),
            dnn_search: None,
        }
    }

    pub fn dnn(cfg: DnnConfig) -> Self {
        Self {
            kind: ClassifierKind::Dnn,
            svm: SvmConfig::default(),
            dnn: cfg,
            dnn_search: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Svm(SvmModel),
    Dnn(ShortcutDnn<f32>),
}

/// A trained model plus the normalization applied to its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub norm: Normalizer,
    pub model: Model,
    pub seed: u64,
}

impl Classifier {
    /// Trains on `data` in the space defined by `norm`, which the caller
    /// fits on whichever rows may inform normalization.
    pub fn fit(spec: &ClassifierSpec, data: &LabeledDataset, norm: Normalizer, seed: u64) -> Result<Self, ClfError> {
        if norm.dims() != data.dims() {
            return Err(ClfError::Shape(format!("normalizer has {} dims, data {}", norm.dims(), data.dims())));
        }
        let (features, labels, k) = data.clone().into_parts();
        let labels = labels.ok_or(ClfError::Data(crate::dataio::DataError::Unlabeled))?;
        let z = LabeledDataset::new(norm.transform(&features), labels, k)?;
        let model = match spec.kind {
            ClassifierKind::Svm => Model::Svm(svm_train(&z, &spec.svm, seed)?),
            ClassifierKind::Dnn => {
                let cfg = match &spec.dnn_search {
                    None => spec.dnn.clone(),
                    Some(space) => {
                        let mut rng = RngStream::new(seed).split_named("search-split");
                        let (fit, val) = stratified_split(z.require_labels()?, k as usize, 0.2, &mut rng);
                        random_search::<f32>(space, &z.select(&fit), &z.select(&val), seed)?.best_config().clone()
                    }
                };
                Model::Dnn(dnn_train::<f32>(&z, &cfg, seed)?.0)
            }
        };
        Ok(Self { norm, model, seed })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            Model::Svm(_) => ClassifierKind::Svm,
            Model::Dnn(_) => ClassifierKind::Dnn,
        }
    }

    pub fn n_classes(&self) -> usize {
        match &self.model {
            Model::Svm(m) => m.n_classes(),
            Model::Dnn(m) => m.n_classes(),
        }
    }

    /// Per-class confidences for raw (unnormalized) rows.
    pub fn confidence(&self, rows: &FeatureMatrix) -> Result<Vec<Vec<f64>>, ClfError> {
        let z = self.norm.transform(rows);
        match &self.model {
            Model::Svm(m) => Ok(svm_confidence(m, &z)),
            Model::Dnn(m) => m.confidence(&z),
        }
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u32>, ClfError> {
        let z = self.norm.transform(rows);
        match &self.model {
            Model::Svm(m) => Ok(m.predict(&z)),
            Model::Dnn(m) => m.predict(&z),
        }
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64, ClfError> {
        let labels = data.require_labels()?;
        if labels.is_empty() {
            return Ok(0.0);
        }
        let pred = self.predict(data.features())?;
        Ok(pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut meta = BTreeMap::new();
        let mut tensors = Vec::new();
        let mut stats = vec![("norm.mean".to_string(), self.norm.mean().to_vec()), ("norm.std".to_string(), self.norm.std().to_vec())];
        let tag = match &self.model {
            Model::Svm(m) => {
                meta.insert("c".into(), m.c.to_string());
                for (k, w) in m.weights.iter().enumerate() {
                    stats.push((format!("svm.w{k}"), w.clone()));
                }
                stats.push(("svm.b".to_string(), m.bias.clone()));
                ModelTag::Svm
            }
            Model::Dnn(m) => {
                meta.insert("widths".into(), m.widths().iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","));
                meta.insert("shortcut".into(), m.has_shortcuts().to_string());
                for (n, t) in m.params.iter() {
                    tensors.push((n.to_string(), t.clone()));
                }
                ModelTag::Dnn
            }
        };
        Checkpoint {
            tag,
            seed: self.seed,
            meta,
            tensors,
            stats,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ClfError> {
        let bad = |m: &str| ClfError::Config(format!("classifier checkpoint: {m}"));
        let norm = match (ck.stat("norm.mean"), ck.stat("norm.std")) {
            (Some(m), Some(s)) if m.len() == s.len() => Normalizer::from_parts(m.to_vec(), s.to_vec()),
            _ => return Err(bad("missing normalization statistics")),
        };
        let model = match ck.tag {
            ModelTag::Svm => {
                let bias = ck.stat("svm.b").ok_or_else(|| bad("missing svm.b"))?.to_vec();
                let weights = (0..bias.len())
                    .map(|k| ck.stat(&format!("svm.w{k}")).map(<[f64]>::to_vec).ok_or_else(|| bad("missing svm weights")))
                    .collect::<Result<Vec<_>, _>>()?;
                if weights.iter().any(|w| w.len() != norm.dims()) {
                    return Err(bad("weight length disagrees with normalization"));
                }
                let c = ck.meta_parse("c").map_err(|e| bad(&e.to_string()))?;
                Model::Svm(SvmModel { weights, bias, c })
            }
            ModelTag::Dnn => {
                let widths: Vec<usize> = ck
                    .meta("widths")
                    .map_err(|e| bad(&e.to_string()))?
                    .split(',')
                    .map(|s| s.parse().map_err(|_| bad("bad widths")))
                    .collect::<Result<_, _>>()?;
                let shortcut = ck.meta_parse("shortcut").map_err(|e| bad(&e.to_string()))?;
                let mut params = ParamSet::new();
                for (n, t) in &ck.tensors {
                    params.push(n.clone(), t.clone());
                }
                Model::Dnn(ShortcutDnn::from_params(widths, shortcut, params)?)
            }
            _ => return Err(bad("not a classifier")),
        };
        Ok(Self { norm, model, seed: ck.seed })
    }
}
