use super::{FeatureError, FeatureMatrix};

/// Default process-to-observation noise ratio.
pub const DEFAULT_LDS_RATIO: f64 = 0.1;

/// Scalar Kalman filter followed by a Rauch–Tung–Striebel smoother with unit
/// transition and observation, observation noise 1 and process noise `ratio`.
/// The first state is initialised from the first observation.
pub fn lds_smooth(series: &[f64], ratio: f64) -> Result<Vec<f64>, FeatureError> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(FeatureError::BadRatio(ratio));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite(i));
    }
    let n = series.len();
    if n <= 1 {
        return Ok(series.to_vec());
    }
    let (q, r) = (ratio, 1.0);
    let mut xf = vec![0.0; n];
    let mut pf = vec![0.0; n];
    xf[0] = series[0];
    pf[0] = r;
    for t in 1..n {
        let p_pred = pf[t - 1] + q;
        let k = p_pred / (p_pred + r);
        xf[t] = xf[t - 1] + k * (series[t] - xf[t - 1]);
        pf[t] = (1.0 - k) * p_pred;
    }
    let mut xs = xf.clone();
    for t in (0..n - 1).rev() {
        let c = pf[t] / (pf[t] + q);
        xs[t] = xf[t] + c * (xs[t + 1] - xf[t]);
    }
    Ok(xs)
}

/// Smooths every feature dimension along the row (time) axis.
pub fn lds_smooth_matrix(m: &FeatureMatrix, ratio: f64) -> Result<FeatureMatrix, FeatureError> {
    let (rows, dims) = (m.rows(), m.dims());
    let mut out = m.clone();
    let mut col = vec![0.0; rows];
    for d in 0..dims {
        for (r, v) in col.iter_mut().enumerate() {
            *v = m.get(r, d);
        }
        let s = lds_smooth(&col, ratio)?;
        for (r, v) in s.into_iter().enumerate() {
            out.data_mut()[r * dims + d] = v;
        }
    }
    Ok(out)
}
