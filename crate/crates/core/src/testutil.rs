//! Finite-difference oracle shared by unit tests.

use crate::diffcore::{Gradients, ParamSet, Tensor};
use crate::rng::RngStream;

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Largest relative error between `grads` and central differences of `f`
/// over every parameter component.
pub fn max_fd_error(params: &ParamSet<f64>, grads: &Gradients<f64>, mut f: impl FnMut(&ParamSet<f64>) -> f64) -> f64 {
    let mut worst = 0.0f64;
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let len = params.get(&name).unwrap().len();
        let analytic = grads.get(&name).unwrap_or_else(|| panic!("no gradient for {name}")).clone();
        for k in 0..len {
            let mut plus = params.clone();
            plus.get_mut(&name).unwrap().data_mut()[k] += FD_STEP;
            let mut minus = params.clone();
            minus.get_mut(&name).unwrap().data_mut()[k] -= FD_STEP;
            let numeric = (f(&plus) - f(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic.data()[k], numeric));
        }
    }
    worst
}

pub fn random_tensor(rng: &mut RngStream, rows: usize, cols: usize, scale: f64) -> Tensor<f64> {
    Tensor::from_fn(rows, cols, |_, _| rng.normal() * scale)
}
