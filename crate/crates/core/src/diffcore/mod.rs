//! Dense reverse-mode automatic differentiation.
//!
//! The primitive set covers every loss in the crate: matmul, transpose,
//! broadcasting add/sub/mul, scale, sums, relu, sigmoid, tanh, exp, log,
//! reciprocal, square, sqrt, concat, slice. Softmax, row norms and the
//! reparameterized Gaussian draw are composites over those primitives, so
//! their second derivatives come for free from the recorded backward pass.

mod adam;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState, ParamSet};
pub use tape::{Gradients, Tape, Var, LOG_SQRT_FLOOR};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffError {
    #[error("invalid tensor: shape {shape:?} with {len} values")]
    BadTensor { shape: [usize; 2], len: usize },
    #[error("shape mismatch at node {node} ({op}): {left:?} vs {right:?}")]
    ShapeMismatch {
        node: usize,
        op: &'static str,
        left: [usize; 2],
        right: [usize; 2],
    },
    #[error("node {node} has shape {shape:?}; a scalar output is required")]
    NotScalar { node: usize, shape: [usize; 2] },
    #[error("node {node} is not on this tape")]
    NotOnTape { node: usize },
    #[error("node {node} is not a bound input")]
    NotAnInput { node: usize },
    #[error("no tape input named `{0}`")]
    UnknownInput(String),
    #[error("concat needs at least one operand")]
    EmptyConcat,
    #[error("non-finite value produced at node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },
    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("missing gradient for parameter `{0}`")]
    MissingGradient(String),
}
