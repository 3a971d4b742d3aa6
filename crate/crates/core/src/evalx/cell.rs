use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{EvalError, EvalSettings, FoldPlan};
use crate::augment::{augment_full, augment_selective, gaussian_augment, rda_augment, AugmentError, Augmented, Method, Montage};
use crate::clf::{Classifier, ClassifierKind};
use crate::dataio::{LabeledDataset, Normalizer};
use crate::genmod::{train, GenerativeModel, ModelKind};
use crate::rng::RngStream;

type Slot = Arc<OnceLock<Result<Arc<GenerativeModel<f32>>, String>>>;

/// Trained generators shared by every cell of one sweep, keyed by
/// `(family, fold, seed)`. A generator is trained once even when several
/// cells ask for it concurrently.
#[derive(Default)]
pub struct GeneratorCache {
    slots: Mutex<HashMap<(ModelKind, usize, u64), Slot>>,
}

impl GeneratorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.slots.lock().expect("cache lock").values().filter(|s| s.get().is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_train(
        &self,
        kind: ModelKind,
        fold: usize,
        seed: u64,
        fit: impl FnOnce() -> Result<GenerativeModel<f32>, EvalError>,
    ) -> Result<Arc<GenerativeModel<f32>>, EvalError> {
        let slot = self.slots.lock().expect("cache lock").entry((kind, fold, seed)).or_default().clone();
        slot.get_or_init(|| fit().map(Arc::new).map_err(|e| e.to_string())).clone().map_err(EvalError::Generator)
    }
}

/// Which rows could have influenced one fold's training set.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldAudit {
    pub fold: usize,
    pub test: Vec<usize>,
    /// Rows used for normalization and generator training.
    pub fitted_on: Vec<usize>,
    /// Rows resampled by Gau or RDA, as dataset indices.
    pub sources: Vec<usize>,
    pub appended: usize,
}

impl FoldAudit {
    pub fn is_clean(&self) -> bool {
        let test: std::collections::HashSet<_> = self.test.iter().collect();
        !self.fitted_on.iter().chain(&self.sources).any(|i| test.contains(i))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub accuracies: Vec<f64>,
    pub audits: Vec<FoldAudit>,
}

pub(crate) fn derive(seed: u64, label: &str, fold: usize) -> u64 {
    RngStream::new(seed).split_named(label).split(fold as u64).key()
}

fn fit_generator(kind: ModelKind, train_rows: &LabeledDataset, settings: &EvalSettings, gseed: u64) -> Result<GenerativeModel<f32>, EvalError> {
    let arch = settings.architecture(kind, train_rows.features(), train_rows.n_classes() as usize);
    let model = GenerativeModel::<f32>::new(arch, gseed)?;
    Ok(train(model, train_rows, &settings.schedule(kind, gseed))?.0)
}

#[allow(clippy::too_many_arguments)]
fn augment_fold(
    method: Method,
    count: usize,
    classifier: ClassifierKind,
    train_rows: &LabeledDataset,
    norm: &Normalizer,
    fold: usize,
    settings: &EvalSettings,
    seed: u64,
    cache: &GeneratorCache,
) -> Result<Augmented, EvalError> {
    let aseed = derive(seed, &format!("augment:{method}"), fold);
    let plan = settings.plan(method, count);
    plan.validate()?;
    match method {
        Method::Gau => Ok(gaussian_augment(train_rows, plan.sigma.unwrap_or(0.001), count, aseed)?),
        Method::Rda => {
            let montage = match &settings.montage {
                Some(m) => m.clone(),
                None => Montage::for_channels(train_rows.features().n_channels())?,
            };
            Ok(rda_augment(train_rows, &montage, plan.angle.unwrap_or_default(), count, aseed)?)
        }
        Method::Cwgan | Method::Cvae => {
            let kind = method.generator().expect("generative method");
            let gseed = derive(seed, kind.as_str(), fold);
            let g = cache.get_or_train(kind, fold, gseed, || fit_generator(kind, train_rows, settings, gseed))?;
            Ok(augment_full(&g, None, count, aseed)?)
        }
        Method::Swgan | Method::Svae => {
            let kind = method.generator().expect("generative method");
            let gseed = derive(seed, kind.as_str(), fold);
            let spec = settings.classifier(settings.selective_classifier.unwrap_or(classifier));
            let cseed = derive(seed, "selective-classifier", fold);
            let gen = |rows: &LabeledDataset, round: usize| -> Result<GenerativeModel<f32>, AugmentError> {
                let fitted = if round == 0 {
                    cache.get_or_train(kind, fold, gseed, || fit_generator(kind, rows, settings, gseed)).map(|g| (*g).clone())
                } else {
                    fit_generator(kind, rows, settings, derive(gseed, "round", round))
                };
                fitted.map_err(|e| AugmentError::Config(e.to_string()))
            };
            let clf = |pool: &LabeledDataset| -> Result<Classifier, AugmentError> { Ok(Classifier::fit(&spec, pool, norm.clone(), cseed)?) };
            Ok(augment_selective(train_rows, &plan, aseed, gen, clf)?)
        }
    }
}

/// Cross-validates `classifier` on `data` with `count` rows from `method`
/// appended to each training split. Normalization, generators and the
/// augmenters only see the training split of each fold.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    data: &LabeledDataset,
    method: Method,
    classifier: ClassifierKind,
    count: usize,
    folds: &FoldPlan,
    settings: &EvalSettings,
    seed: u64,
    cache: &GeneratorCache,
) -> Result<CellResult, EvalError> {
    if folds.n() != data.rows() {
        return Err(EvalError::Config(format!("fold plan covers {} rows, dataset has {}", folds.n(), data.rows())));
    }
    let spec = settings.classifier(classifier);
    let mut result = CellResult {
        accuracies: Vec::with_capacity(folds.k),
        audits: Vec::with_capacity(folds.k),
    };
    for fold in 0..folds.k {
        let wrap = |e: EvalError| EvalError::Cell {
            method: method.to_string(),
            classifier: classifier.as_str().to_string(),
            count,
            fold,
            source: Box::new(e),
        };
        let test_idx = folds.test_indices(fold).to_vec();
        let train_idx = folds.train_indices(fold);
        let train_rows = data.select(&train_idx);
        let test_rows = data.select(&test_idx);
        let norm = Normalizer::fit(train_rows.features());
        let mut pool = train_rows.clone();
        let mut audit = FoldAudit {
            fold,
            test: test_idx,
            fitted_on: train_idx.clone(),
            sources: Vec::new(),
            appended: 0,
        };
        if count > 0 {
            let aug = augment_fold(method, count, classifier, &train_rows, &norm, fold, settings, seed, cache).map_err(wrap)?;
            audit.sources = aug.provenance.iter().filter_map(|p| p.source_row).map(|s| train_idx[s]).collect();
            audit.appended = aug.len();
            pool.extend(&aug.rows).map_err(|e| wrap(e.into()))?;
        }
        let clf = Classifier::fit(&spec, &pool, norm, derive(seed, "classifier", fold)).map_err(|e| wrap(e.into()))?;
        result.accuracies.push(clf.accuracy(&test_rows).map_err(|e| wrap(e.into()))?);
        result.audits.push(audit);
    }
    Ok(result)
}
