use super::GenError;
use crate::diffcore::{Tape, Tensor, Var};
use crate::Scalar;

/// `½ Σ (exp(logΣ) + μ² − 1 − logΣ)` over every element.
pub fn kl_diag_gaussian<T: Scalar>(tape: &mut Tape<T>, mu: Var, log_var: Var) -> Result<Var, GenError> {
    if tape.shape(mu) != tape.shape(log_var) {
        return Err(GenError::Shape(format!("mu {:?} and log-variance {:?} differ", tape.shape(mu), tape.shape(log_var))));
    }
    let e = tape.exp(log_var)?;
    let m2 = tape.square(mu)?;
    let a = tape.add(e, m2)?;
    let b = tape.sub(a, log_var)?;
    let c = tape.add_scalar(b, -T::one())?;
    let s = tape.sum(c)?;
    Ok(tape.scale(s, T::of(0.5))?)
}

/// Closed-form KL of `N(mu, diag(exp(log_var)))` from `N(0, I)`.
pub fn kl_diag_gaussian_value(mu: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mu.iter().zip(log_var).map(|(m, lv)| lv.exp() + m * m - 1.0 - lv).sum::<f64>()
}

/// Negated ELBO: batch mean of `Σ (x − x̂)²` plus the KL term.
pub fn vae_objective<T: Scalar>(tape: &mut Tape<T>, x: Var, x_hat: Var, mu: Var, log_var: Var) -> Result<Var, GenError> {
    let [rows, _] = tape.shape(x);
    if tape.shape(x_hat) != tape.shape(x) {
        return Err(GenError::Shape(format!("reconstruction {:?} does not match batch {:?}", tape.shape(x_hat), tape.shape(x))));
    }
    let d = tape.sub(x, x_hat)?;
    let sq = tape.square(d)?;
    let rec = tape.sum(sq)?;
    let kl = kl_diag_gaussian(tape, mu, log_var)?;
    let total = tape.add(rec, kl)?;
    Ok(tape.scale(total, T::one() / T::of(rows as f64))?)
}

/// `α·x_r + (1 − α)·x_g` with one `α` per row.
pub fn interpolate<T: Scalar>(x_r: &Tensor<T>, x_g: &Tensor<T>, alpha: &[T]) -> Result<Tensor<T>, GenError> {
    if x_r.shape() != x_g.shape() {
        return Err(GenError::Shape(format!("real {:?} and generated {:?} differ", x_r.shape(), x_g.shape())));
    }
    if alpha.len() != x_r.rows() {
        return Err(GenError::Shape(format!("{} alphas for {} rows", alpha.len(), x_r.rows())));
    }
    if let Some(&a) = alpha.iter().find(|a| !(**a >= T::zero() && **a <= T::one())) {
        return Err(GenError::Alpha(a.to_f64_lossy()));
    }
    Ok(Tensor::from_fn(x_r.rows(), x_r.cols(), |r, c| {
        let a = alpha[r];
        a * x_r.get(r, c) + (T::one() - a) * x_g.get(r, c)
    }))
}

/// Floor under the squared gradient norm; small enough that a zero gradient
/// still reads as norm 0 to within round-off.
const NORM_FLOOR: f64 = 1e-30;

/// `λ · mean_rows (‖∇ D(x̂)‖₂ − 1)²`, where `x_hat` is a leaf on `tape` and
/// `critic` maps it to per-row scores. The result stays differentiable in
/// the critic parameters.
pub fn gradient_penalty<T: Scalar>(tape: &mut Tape<T>, x_hat: Var, lambda: T, critic: impl FnOnce(&mut Tape<T>, Var) -> Result<Var, GenError>) -> Result<Var, GenError> {
    let d = critic(tape, x_hat)?;
    let s = tape.sum(d)?;
    let g = tape.input_gradient(s, x_hat)?;
    let sq = tape.square(g)?;
    let n2 = tape.row_sums(sq)?;
    let norm = tape.sqrt_floor(n2, T::of(NORM_FLOOR))?;
    let dev = tape.add_scalar(norm, -T::one())?;
    let dev2 = tape.square(dev)?;
    let m = tape.mean(dev2)?;
    Ok(tape.scale(m, lambda)?)
}

/// One-hot rows for `labels`.
pub fn one_hot<T: Scalar>(labels: &[u32], n_classes: usize) -> Result<Tensor<T>, GenError> {
    if let Some((row, &l)) = labels.iter().enumerate().find(|(_, &l)| l as usize >= n_classes) {
        return Err(GenError::Label { row, label: l, n_classes });
    }
    if labels.is_empty() || n_classes == 0 {
        return Err(GenError::Shape("one-hot encoding needs at least one label and class".into()));
    }
    let mut t = Tensor::zeros(labels.len(), n_classes);
    for (r, &l) in labels.iter().enumerate() {
        t.set(r, l as usize, T::one());
    }
    Ok(t)
}
