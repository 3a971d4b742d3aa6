//! Cross-validated evaluation of augmentation methods: folds, cells,
//! append-count sweeps, reports and paired significance tests.

mod cell;
mod folds;
mod report;
mod settings;
mod stats;
mod sweep;


pub use cell::{run_cell, CellResult, FoldAudit, GeneratorCache};
pub use folds::{make_folds, FoldPlan};
pub use report::{Aggregate, CellKey, CellRow, Failure, Summary, SweepReport};
pub use settings::EvalSettings;
pub use stats::{mean_std, significance};
pub use sweep::{run_sweep, CellStore, NoStore, SweepSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation setup: {0}")]
    Config(String),
    #[error("{method}/{classifier} at count {count}, fold {fold}: {source}")]
    Cell {
        method: String,
        classifier: String,
        count: usize,
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("generator training failed: {0}")]
    Generator(String),
    #[error(transparent)]
    Augment(#[from] crate::augment::AugmentError),
    #[error(transparent)]
    Clf(#[from] crate::clf::ClfError),
    #[error(transparent)]
    Gen(#[from] crate::genmod::GenError),
    #[error(transparent)]
    Data(#[from] crate::dataio::DataError),
}
