use super::DataError;
use crate::featx::{FeatureKind, FeatureMatrix};

/// Feature matrix with optional per-row class labels in `0..n_classes`.
///
/// `n_classes == 0` marks an unlabeled dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    labels: Option<Vec<u32>>,
    n_classes: u32,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<u32>, n_classes: u32) -> Result<Self, DataError> {
        if labels.len() != features.rows() {
            return Err(DataError::LabelCount {
                rows: features.rows(),
                labels: labels.len(),
            });
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(DataError::LabelOutOfRange { row, label, arity: n_classes });
        }
        Ok(Self {
            features,
            labels: Some(labels),
            n_classes,
        })
    }

    pub fn unlabeled(features: FeatureMatrix) -> Self {
        Self {
            features,
            labels: None,
            n_classes: 0,
        }
    }

    pub fn empty_like(&self) -> Self {
        Self {
            features: FeatureMatrix::empty(self.features.n_channels(), self.features.n_bands(), self.features.kind()),
            labels: self.labels.as_ref().map(|_| Vec::new()),
            n_classes: self.n_classes,
        }
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut FeatureMatrix {
        &mut self.features
    }

    pub fn into_parts(self) -> (FeatureMatrix, Option<Vec<u32>>, u32) {
        (self.features, self.labels, self.n_classes)
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Labels, or [`DataError::Unlabeled`].
    pub fn require_labels(&self) -> Result<&[u32], DataError> {
        self.labels().ok_or(DataError::Unlabeled)
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }

    pub fn dims(&self) -> usize {
        self.features.dims()
    }

    pub fn kind(&self) -> FeatureKind {
        self.features.kind()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            n_classes: self.n_classes,
        }
    }

    /// Rows per class; empty for unlabeled data.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes as usize];
        for &l in self.labels().unwrap_or(&[]) {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Appends `other`. Both must agree on layout and labeling.
    pub fn extend(&mut self, other: &LabeledDataset) -> Result<(), DataError> {
        if self.is_labeled() != other.is_labeled() {
            return Err(DataError::Unlabeled);
        }
        if let Some(l) = other.labels() {
            if let Some((row, &label)) = l.iter().enumerate().find(|(_, &x)| x >= self.n_classes) {
                return Err(DataError::LabelOutOfRange {
                    row,
                    label,
                    arity: self.n_classes,
                });
            }
        }
        self.features.extend(&other.features)?;
        if let (Some(a), Some(b)) = (self.labels.as_mut(), other.labels()) {
            a.extend_from_slice(b);
        }
        Ok(())
    }

    pub fn push(&mut self, row: &[f64], label: Option<u32>) -> Result<(), DataError> {
        match (&mut self.labels, label) {
            (Some(ls), Some(l)) => {
                if l >= self.n_classes {
                    return Err(DataError::LabelOutOfRange {
                        row: ls.len(),
                        label: l,
                        arity: self.n_classes,
                    });
                }
                self.features.push_row(row)?;
                ls.push(l);
            }
            (None, None) => self.features.push_row(row)?,
            _ => return Err(DataError::Unlabeled),
        }
        Ok(())
    }
}
