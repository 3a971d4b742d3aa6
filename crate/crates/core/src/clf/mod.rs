//! Classifiers: one-vs-rest linear SVM, shortcut DNN and random search.

mod classifier;
mod dnn;
mod search;
mod svm;


pub use classifier::{Classifier, ClassifierKind, ClassifierSpec, Model};
pub use dnn::{cross_entropy, dnn_train, DnnConfig, DnnTrace, ShortcutDnn};
pub use search::{random_search, SearchOutcome, SearchSpace};
pub use svm::{svm_confidence, svm_fit, svm_train, SvmConfig, SvmModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClfError {
    #[error("training set must contain at least two classes")]
    SingleClass,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Diff(#[from] crate::diffcore::DiffError),
    #[error(transparent)]
    Data(#[from] crate::dataio::DataError),
}

impl From<crate::genmod::GenError> for ClfError {
    fn from(e: crate::genmod::GenError) -> Self {
        match e {
            crate::genmod::GenError::Diff(d) => ClfError::Diff(d),
            other => ClfError::Shape(other.to_string()),
        }
    }
}
