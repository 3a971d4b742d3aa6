use rayon::prelude::*;

use super::{make_folds, run_cell, CellKey, EvalError, EvalSettings, Failure, GeneratorCache, SweepReport};
use crate::augment::Method;
use crate::clf::ClassifierKind;
use crate::dataio::LabeledDataset;

/// Grid of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub classifiers: Vec<ClassifierKind>,
    pub counts: Vec<usize>,
    pub seed: u64,
    /// Worker threads; all cores when unset.
    pub jobs: Option<usize>,
}

/// Completed-cell storage, so interrupted sweeps can resume.
pub trait CellStore: Sync {
    fn load(&self, key: &CellKey) -> Option<Vec<f64>>;
    fn save(&self, key: &CellKey, accuracies: &[f64]);
}

pub struct NoStore;

impl CellStore for NoStore {
    fn load(&self, _: &CellKey) -> Option<Vec<f64>> {
        None
    }

    fn save(&self, _: &CellKey, _: &[f64]) {}
}

/// Runs every (method, classifier, count) cell on one fold plan shared by
/// all of them; the count-0 baseline is computed once per classifier.
/// Failed cells are listed in the report instead of aborting.
pub fn run_sweep(data: &LabeledDataset, spec: &SweepSpec, settings: &EvalSettings, store: &dyn CellStore) -> Result<SweepReport, EvalError> {
    if spec.methods.is_empty() || spec.classifiers.is_empty() {
        return Err(EvalError::Config("a sweep needs at least one method and one classifier".into()));
    }
    let mut counts = spec.counts.clone();
    counts.sort_unstable();
    counts.dedup();
    if counts.first() != Some(&0) {
        return Err(EvalError::Config("sweep counts must include 0".into()));
    }
    let folds = make_folds(data.require_labels()?, settings.folds, spec.seed)?;
    let mut keys = Vec::new();
    for &classifier in &spec.classifiers {
        keys.push(CellKey {
            method: None,
            classifier,
            count: 0,
        });
        for &m in &spec.methods {
            for &count in counts.iter().filter(|&&c| c > 0) {
                keys.push(CellKey {
                    method: Some(m),
                    classifier,
                    count,
                });
            }
        }
    }
    let cache = GeneratorCache::new();
    let work = || -> Vec<Result<Vec<f64>, String>> {
        keys.par_iter()
            .map(|key| {
                if let Some(acc) = store.load(key) {
                    return Ok(acc);
                }
                let method = key.method.unwrap_or(spec.methods[0]);
                let out = run_cell(data, method, key.classifier, key.count, &folds, settings, spec.seed, &cache).map_err(|e| e.to_string())?;
                if !out.audits.iter().all(|a| a.is_clean()) {
                    return Err(format!("cell {} used test-fold rows", key.id()));
                }
                store.save(key, &out.accuracies);
                log::info!("cell {} done", key.id());
                Ok(out.accuracies)
            })
            .collect()
    };
    let results = match spec.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| EvalError::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let lookup = |key: &CellKey| keys.iter().position(|k| k == key).map(|i| &results[i]);
    for (key, res) in keys.iter().zip(&results) {
        if let Err(reason) = res {
            failures.push(Failure {
                key: key.clone(),
                reason: reason.clone(),
            });
        }
    }
    for &m in &spec.methods {
        for &classifier in &spec.classifiers {
            for &count in &counts {
                let key = CellKey {
                    method: (count > 0).then_some(m),
                    classifier,
                    count,
                };
                if let Some(Ok(acc)) = lookup(&key) {
                    cells.push((m, classifier, count, acc.clone()));
                }
            }
        }
    }
    Ok(SweepReport::assemble(
        data.kind(),
        settings.folds,
        spec.seed,
        &spec.methods,
        &spec.classifiers,
        &counts,
        cells,
        failures,
    ))
}
