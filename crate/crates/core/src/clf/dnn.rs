use serde::{Deserialize, Serialize};

use super::ClfError;
use crate::dataio::LabeledDataset;
use crate::diffcore::{AdamConfig, AdamState, DiffError, ParamSet, Tape, Tensor, Var};
use crate::featx::FeatureMatrix;
use crate::genmod::{one_hot, Bound};
use crate::rng::RngStream;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnConfig {
    /// Hidden layer widths; their count is the depth.
    pub hidden: Vec<usize>,
    pub shortcut: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for DnnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256; 4],
            shortcut: true,
            epochs: 300,
            batch_size: 128,
            lr: 1e-4,
        }
    }
}

/// ReLU network with optional projections `W_s` that skip each pair of
/// hidden layers: `h ← ReLU(W₂ ReLU(W₁ h + b₁) + b₂ + W_s h)`. With an odd
/// depth the last hidden layer is plain. Logits come from a final affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortcutDnn<T> {
    widths: Vec<usize>,
    shortcut: bool,
    pub params: ParamSet<T>,
}

impl<T: Scalar> ShortcutDnn<T> {
    /// `widths` = input, hidden…, classes.
    pub fn new(widths: Vec<usize>, shortcut: bool, rng: &mut RngStream) -> Result<Self, ClfError> {
        if widths.len() < 3 || widths.contains(&0) {
            return Err(ClfError::Config(format!("DNN widths {widths:?} need an input, ≥1 hidden layer and an output")));
        }
        let mut params = ParamSet::new();
        for l in 0..widths.len() - 1 {
            let (fi, fo) = (widths[l], widths[l + 1]);
            let s = (2.0 / fi as f64).sqrt();
            params.push(format!("dnn.l{l}.w"), Tensor::from_fn(fi, fo, |_, _| T::of(rng.normal() * s)));
            params.push(format!("dnn.l{l}.b"), Tensor::zeros(1, fo));
        }
        let mut net = Self { widths, shortcut, params };
        if shortcut {
            for (p, (fi, fo)) in net.pairs() {
                let s = (1.0 / fi as f64).sqrt();
                net.params.push(format!("dnn.s{p}"), Tensor::from_fn(fi, fo, |_, _| T::of(rng.normal() * s)));
            }
        }
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn has_shortcuts(&self) -> bool {
        self.shortcut
    }

    pub fn n_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    /// `(pair index, (input width, output width))` per shortcut pair.
    fn pairs(&self) -> Vec<(usize, (usize, usize))> {
        (0..self.depth() / 2).map(|p| (p, (self.widths[2 * p], self.widths[2 * p + 2]))).collect()
    }

    pub fn forward_tape(&self, tape: &mut Tape<T>, bound: &Bound, x: Var) -> Result<Var, ClfError> {
        let [_, c] = tape.shape(x);
        if c != self.widths[0] {
            return Err(ClfError::Shape(format!("network expects {} columns, got {c}", self.widths[0])));
        }
        let layer = |tape: &mut Tape<T>, l: usize, h: Var| -> Result<Var, ClfError> {
            let w = bound.get(&format!("dnn.l{l}.w"))?;
            let b = bound.get(&format!("dnn.l{l}.b"))?;
            Ok(tape.linear(h, w, b)?)
        };
        let mut h = x;
        let depth = self.depth();
        let mut l = 0;
        while l < depth {
            if l + 1 < depth {
                let a = layer(tape, l, h)?;
                let a = tape.relu(a)?;
                let mut f = layer(tape, l + 1, a)?;
                if self.shortcut {
                    let ws = bound.get(&format!("dnn.s{}", l / 2))?;
                    let proj = tape.matmul(h, ws)?;
                    f = tape.add(f, proj)?;
                }
                h = tape.relu(f)?;
                l += 2;
            } else {
                let a = layer(tape, l, h)?;
                h = tape.relu(a)?;
                l += 1;
            }
        }
        layer(tape, depth, h)
    }

    /// Logits for every row.
    pub fn forward(&self, rows: &FeatureMatrix) -> Result<Vec<Vec<f64>>, ClfError> {
        if rows.dims() != self.widths[0] {
            return Err(ClfError::Shape(format!("network expects {} columns, got {}", self.widths[0], rows.dims())));
        }
        let mut out = Vec::with_capacity(rows.rows());
        for start in (0..rows.rows()).step_by(1024) {
            let end = (start + 1024).min(rows.rows());
            let x = Tensor::from_fn(end - start, rows.dims(), |r, c| T::of(rows.get(start + r, c)));
            let mut tape = Tape::new();
            let bound = Bound::new(&mut tape, &self.params, false);
            let xv = tape.constant(x);
            let y = self.forward_tape(&mut tape, &bound, xv)?;
            let v = tape.value(y);
            for r in 0..v.rows() {
                out.push(v.row(r).iter().map(|x| x.to_f64_lossy()).collect());
            }
        }
        Ok(out)
    }

    pub fn confidence(&self, rows: &FeatureMatrix) -> Result<Vec<Vec<f64>>, ClfError> {
        Ok(self.forward(rows)?.iter().map(|l| super::svm::softmax(l)).collect())
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u32>, ClfError> {
        Ok(self.forward(rows)?.iter().map(|l| super::svm::argmax(l) as u32).collect())
    }
}

/// Mean softmax cross-entropy of `logits` against `labels`.
pub fn cross_entropy<T: Scalar>(tape: &mut Tape<T>, logits: Var, labels: &[u32], n_classes: usize) -> Result<Var, ClfError> {
    let y = tape.constant(one_hot(labels, n_classes)?);
    let ls = tape.log_softmax(logits)?;
    let picked = tape.mul(ls, y)?;
    let s = tape.sum(picked)?;
    Ok(tape.scale(s, -T::one() / T::of(labels.len() as f64))?)
}

/// Per-epoch training loss and accuracy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DnnTrace {
    pub loss: Vec<f64>,
    pub accuracy: Vec<f64>,
}

/// Adam on softmax cross-entropy; expects normalized features.
pub fn dnn_train<T: Scalar>(data: &LabeledDataset, cfg: &DnnConfig, seed: u64) -> Result<(ShortcutDnn<T>, DnnTrace), ClfError> {
    let labels = data.require_labels()?;
    if data.is_empty() {
        return Err(ClfError::Config("training set is empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(ClfError::Config("batch size must be positive".into()));
    }
    let k = data.n_classes() as usize;
    let root = RngStream::new(seed).split_named("dnn");
    let mut widths = vec![data.dims()];
    widths.extend_from_slice(&cfg.hidden);
    widths.push(k);
    let mut net = ShortcutDnn::<T>::new(widths, cfg.shortcut, &mut root.split_named("init"))?;
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &net.params,
    );
    let x = Tensor::from_fn(data.rows(), data.dims(), |r, c| T::of(data.features().get(r, c)));
    let mut rng = root.split_named("batches");
    let mut trace = DnnTrace::default();
    let n = data.rows();
    for epoch in 0..cfg.epochs {
        let order = rng.permutation(n);
        let (mut loss_sum, mut hits) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            let lb: Vec<u32> = idx.iter().map(|&i| labels[i]).collect();
            let mut tape = Tape::new();
            let bound = Bound::new(&mut tape, &net.params, true);
            let xv = tape.constant(x.select_rows(idx));
            let logits = net.forward_tape(&mut tape, &bound, xv).map_err(|e| diverged(e, epoch))?;
            let loss = cross_entropy(&mut tape, logits, &lb, k).map_err(|e| diverged(e, epoch))?;
            let lv = tape.value(loss).item().to_f64_lossy();
            if !lv.is_finite() {
                return Err(ClfError::Diverged { epoch });
            }
            loss_sum += lv * idx.len() as f64;
            let lt = tape.value(logits);
            for (r, &l) in lb.iter().enumerate() {
                let row: Vec<f64> = lt.row(r).iter().map(|v| v.to_f64_lossy()).collect();
                hits += usize::from(super::svm::argmax(&row) as u32 == l);
            }
            let grads = tape.backward(loss).map_err(|e| diverged(e.into(), epoch))?;
            adam.step(&mut net.params, &grads).map_err(|e| diverged(e.into(), epoch))?;
        }
        trace.loss.push(loss_sum / n as f64);
        trace.accuracy.push(hits as f64 / n as f64);
    }
    Ok((net, trace))
}

fn diverged(e: ClfError, epoch: usize) -> ClfError {
    match e {
        ClfError::Diff(DiffError::NonFinite { .. } | DiffError::NonFiniteGradient(_)) => ClfError::Diverged { epoch },
        other => other,
    }
}

impl<T: Scalar> ShortcutDnn<T> {
    /// Network with explicit weights, validated against the layout of `widths`.
    pub fn from_params(widths: Vec<usize>, shortcut: bool, params: ParamSet<T>) -> Result<Self, ClfError> {
        let template = ShortcutDnn::<T>::new(widths.clone(), shortcut, &mut RngStream::new(0))?;
        if params.len() != template.params.len() {
            return Err(ClfError::Shape(format!("{} parameters, network needs {}", params.len(), template.params.len())));
        }
        let mut ordered = ParamSet::new();
        for (name, t) in template.params.iter() {
            match params.get(name) {
                Some(p) if p.shape() == t.shape() => ordered.push(name, p.clone()),
                _ => return Err(ClfError::Shape(format!("parameter {name} missing or misshapen"))),
            }
        }
        let params = ordered;
        Ok(Self { widths, shortcut, params })
    }
}
