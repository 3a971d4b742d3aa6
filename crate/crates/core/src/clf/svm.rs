use serde::{Deserialize, Serialize};

use super::ClfError;
use crate::dataio::LabeledDataset;
use crate::featx::FeatureMatrix;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Candidate trade-offs, searched in ascending order.
    pub c_grid: Vec<f64>,
    pub max_epochs: usize,
    pub tol: f64,
    /// Held-out share for choosing `c`.
    pub val_fraction: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c_grid: (-10..=10).map(|e| 2f64.powi(e)).collect(),
            max_epochs: 1000,
            tol: 1e-6,
            val_fraction: 0.2,
        }
    }
}

/// One-vs-rest linear SVM. Row `k` of `weights` scores class `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub c: f64,
}

impl SvmModel {
    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Signed margins `w_k · x + b_k`.
    pub fn margins(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> u32 {
        argmax(&self.margins(row)) as u32
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Vec<u32> {
        (0..rows.rows()).map(|r| self.predict_row(rows.row(r))).collect()
    }
}

/// First index of the largest value.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Softmax over the per-class margins of each row.
pub fn svm_confidence(model: &SvmModel, rows: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..rows.rows()).map(|r| softmax(&model.margins(rows.row(r)))).collect()
}

/// Binary dual coordinate descent for
/// `min ½(‖w‖² + b²) + (c / n) Σ max(0, 1 − y_i (w·x_i + b))`;
/// the bias is an extra unit feature. `alpha` is a warm start and is
/// updated in place.
fn dcd_binary(x: &FeatureMatrix, y: &[f64], c: f64, cfg: &SvmConfig, alpha: &mut [f64], rng: &mut RngStream) -> (Vec<f64>, f64) {
    let (n, d) = (x.rows(), x.dims());
    let upper = c / n as f64;
    let q: Vec<f64> = (0..n).map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>() + 1.0).collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for i in 0..n {
        alpha[i] = alpha[i].clamp(0.0, upper);
        if alpha[i] != 0.0 {
            let s = alpha[i] * y[i];
            for (wj, xj) in w.iter_mut().zip(x.row(i)) {
                *wj += s * xj;
            }
            b += s;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.max_epochs {
        rng.shuffle(&mut order);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let xi = x.row(i);
            let g = y[i] * (w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q[i]).clamp(0.0, upper);
                let s = (alpha[i] - old) * y[i];
                if s != 0.0 {
                    for (wj, xj) in w.iter_mut().zip(xi) {
                        *wj += s * xj;
                    }
                    b += s;
                }
            }
        }
        if pg_max - pg_min <= cfg.tol {
            break;
        }
    }
    (w, b)
}

/// State reused across an ascending `c` path.
struct WarmStart {
    alphas: Vec<Vec<f64>>,
}

fn fit_path(data: &LabeledDataset, c: f64, cfg: &SvmConfig, warm: &mut WarmStart, rng: &mut RngStream) -> Result<SvmModel, ClfError> {
    let labels = data.require_labels()?;
    let k = data.n_classes() as usize;
    let mut weights = Vec::with_capacity(k);
    let mut bias = Vec::with_capacity(k);
    for class in 0..k {
        let y: Vec<f64> = labels.iter().map(|&l| if l as usize == class { 1.0 } else { -1.0 }).collect();
        let (w, b) = dcd_binary(data.features(), &y, c, cfg, &mut warm.alphas[class], rng);
        weights.push(w);
        bias.push(b);
    }
    Ok(SvmModel { weights, bias, c })
}

fn check_trainable(data: &LabeledDataset) -> Result<(), ClfError> {
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(ClfError::SingleClass);
    }
    Ok(())
}

/// Trains at a fixed `c`.
pub fn svm_fit(data: &LabeledDataset, c: f64, cfg: &SvmConfig, seed: u64) -> Result<SvmModel, ClfError> {
    check_trainable(data)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(ClfError::Config(format!("c must be positive, got {c}")));
    }
    let mut warm = WarmStart {
        alphas: vec![vec![0.0; data.rows()]; data.n_classes() as usize],
    };
    fit_path(data, c, cfg, &mut warm, &mut RngStream::new(seed).split_named("svm"))
}

/// Stratified split: the first `ceil(frac · n_c)` of each shuffled class go to validation.
pub(crate) fn stratified_split(labels: &[u32], n_classes: usize, frac: f64, rng: &mut RngStream) -> (Vec<usize>, Vec<usize>) {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for mut idx in by_class {
        rng.shuffle(&mut idx);
        let nv = if idx.len() >= 2 { ((idx.len() as f64) * frac).ceil() as usize } else { 0 };
        val.extend_from_slice(&idx[..nv]);
        fit.extend_from_slice(&idx[nv..]);
    }
    fit.sort_unstable();
    val.sort_unstable();
    (fit, val)
}

/// Mean one-vs-rest hinge loss summed over classes.
fn hinge(model: &SvmModel, data: &LabeledDataset) -> f64 {
    let labels = data.labels().unwrap_or(&[]);
    if labels.is_empty() {
        return 0.0;
    }
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            model
                .margins(data.row(i))
                .iter()
                .enumerate()
                .map(|(c, m)| (1.0 - if c as u32 == l { *m } else { -*m }).max(0.0))
                .sum::<f64>()
        })
        .sum();
    total / labels.len() as f64
}

fn accuracy(model: &SvmModel, data: &LabeledDataset) -> f64 {
    let labels = data.labels().unwrap_or(&[]);
    if labels.is_empty() {
        return 0.0;
    }
    let hits = labels.iter().enumerate().filter(|(i, &l)| model.predict_row(data.row(*i)) == l).count();
    hits as f64 / labels.len() as f64
}

/// Chooses `c` by validation accuracy on a stratified hold-out, breaking
/// ties by lower validation hinge loss and then by the smaller `c`, and
/// refits on every row.
pub fn svm_train(data: &LabeledDataset, cfg: &SvmConfig, seed: u64) -> Result<SvmModel, ClfError> {
    check_trainable(data)?;
    if cfg.c_grid.is_empty() || cfg.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(ClfError::Config("c grid must be a nonempty list of positive values".into()));
    }
    let mut grid = cfg.c_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let root = RngStream::new(seed).split_named("svm");
    let best_c = if grid.len() == 1 {
        grid[0]
    } else {
        let labels = data.require_labels()?;
        let (fit_idx, val_idx) = stratified_split(labels, data.n_classes() as usize, cfg.val_fraction, &mut root.split_named("split"));
        let fit = data.select(&fit_idx);
        let val = data.select(&val_idx);
        if check_trainable(&fit).is_err() || val.is_empty() {
            grid[0]
        } else {
            let mut warm = WarmStart {
                alphas: vec![vec![0.0; fit.rows()]; data.n_classes() as usize],
            };
            let mut rng = root.split_named("path");
            let mut best = (f64::NEG_INFINITY, f64::INFINITY, grid[0]);
            for &c in &grid {
                let m = fit_path(&fit, c, cfg, &mut warm, &mut rng)?;
                let (acc, loss) = (accuracy(&m, &val), hinge(&m, &val));
                if acc > best.0 || (acc == best.0 && loss < best.1) {
                    best = (acc, loss, c);
                }
            }
            best.2
        }
    };
    let mut warm = WarmStart {
        alphas: vec![vec![0.0; data.rows()]; data.n_classes() as usize],
    };
    fit_path(data, best_c, cfg, &mut warm, &mut root.split_named("final"))
}
