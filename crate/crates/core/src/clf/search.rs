use serde::{Deserialize, Serialize};

use super::dnn::{dnn_train, DnnConfig, ShortcutDnn};
use super::ClfError;
use crate::dataio::LabeledDataset;
use crate::rng::RngStream;
use crate::Scalar;

/// Sets the random search draws from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub lrs: Vec<f64>,
    pub depth_min: usize,
    pub depth_max: usize,
    pub batch_sizes: Vec<usize>,
    pub shortcut: Vec<bool>,
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub trials: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            lrs: vec![0.0005, 0.0001, 0.00005, 0.00001],
            depth_min: 4,
            depth_max: 8,
            batch_sizes: vec![128, 256, 512],
            shortcut: vec![true, false],
            widths: vec![128, 256, 512],
            epochs: 300,
            trials: 10,
        }
    }
}

impl SearchSpace {
    fn validate(&self) -> Result<(), ClfError> {
        if self.trials == 0 {
            return Err(ClfError::Config("random search needs at least one trial".into()));
        }
        if self.lrs.is_empty() || self.batch_sizes.is_empty() || self.shortcut.is_empty() || self.widths.is_empty() {
            return Err(ClfError::Config("every search set must be nonempty".into()));
        }
        if self.depth_min == 0 || self.depth_min > self.depth_max {
            return Err(ClfError::Config(format!("depth range {}..={} is empty", self.depth_min, self.depth_max)));
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut RngStream) -> DnnConfig {
        let depth = self.depth_min + rng.below(self.depth_max - self.depth_min + 1);
        DnnConfig {
            hidden: (0..depth).map(|_| self.widths[rng.below(self.widths.len())]).collect(),
            shortcut: self.shortcut[rng.below(self.shortcut.len())],
            epochs: self.epochs,
            batch_size: self.batch_sizes[rng.below(self.batch_sizes.len())],
            lr: self.lrs[rng.below(self.lrs.len())],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<T> {
    pub best: usize,
    pub configs: Vec<DnnConfig>,
    pub accuracies: Vec<f64>,
    pub model: ShortcutDnn<T>,
}

impl<T> SearchOutcome<T> {
    pub fn best_config(&self) -> &DnnConfig {
        &self.configs[self.best]
    }

    pub fn best_accuracy(&self) -> f64 {
        self.accuracies[self.best]
    }
}

/// Trains one network per drawn config and keeps the most accurate on
/// `val`; ties go to the earlier trial. Every trial trains from `seed`, so
/// equal configs give equal networks.
pub fn random_search<T: Scalar>(space: &SearchSpace, train: &LabeledDataset, val: &LabeledDataset, seed: u64) -> Result<SearchOutcome<T>, ClfError> {
    space.validate()?;
    let val_labels = val.require_labels()?;
    let draws = RngStream::new(seed).split_named("search");
    let mut configs = Vec::with_capacity(space.trials);
    let mut accuracies = Vec::with_capacity(space.trials);
    let mut best: Option<(usize, ShortcutDnn<T>)> = None;
    for trial in 0..space.trials {
        let cfg = space.draw(&mut draws.split(trial as u64));
        let (net, _) = dnn_train::<T>(train, &cfg, seed)?;
        let pred = net.predict(val.features())?;
        let acc = if val_labels.is_empty() {
            0.0
        } else {
            pred.iter().zip(val_labels).filter(|(p, l)| p == l).count() as f64 / val_labels.len() as f64
        };
        let better = match &best {
            None => true,
            Some((b, _)) => acc > accuracies[*b],
        };
        configs.push(cfg);
        accuracies.push(acc);
        if better {
            best = Some((trial, net));
        }
    }
    let (best, model) = best.expect("at least one trial");
    Ok(SearchOutcome { best, configs, accuracies, model })
}
