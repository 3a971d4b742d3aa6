use serde::{Deserialize, Serialize};

use super::mlp::Bound;
use super::model::{GanModel, GenerativeModel, Network, VaeModel};
use super::GenError;
use crate::dataio::{LabeledDataset, Normalizer};
use crate::diffcore::{AdamConfig, AdamState, DiffError, Tape, Tensor};
use crate::featx::FeatureMatrix;
use crate::rng::RngStream;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// 300 epochs, batch 64, Adam lr 1e-4, β = (0, 0.9).
    pub fn gan_default(seed: u64) -> Self {
        Self {
            epochs: 300,
            batch_size: 64,
            lr: 1e-4,
            beta1: 0.0,
            beta2: 0.9,
            seed,
        }
    }

    /// 200 epochs, batch 64, Adam lr 1e-3, β = (0.9, 0.999).
    pub fn vae_default(seed: u64) -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.batch_size < 2 {
            return Err(GenError::Config(format!("batch size must be at least 2, got {}", self.batch_size)));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(GenError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        for b in [self.beta1, self.beta2] {
            if !(0.0..1.0).contains(&b) {
                return Err(GenError::Config(format!("Adam betas must lie in [0, 1), got {b}")));
            }
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            ..AdamConfig::default()
        }
    }
}

/// Per-epoch means of the named loss components.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTrace {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl LossTrace {
    fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (e, r) in self.rows.iter().enumerate() {
            s.push_str(&e.to_string());
            for v in r {
                s.push_str(&format!(",{v:e}"));
            }
            s.push('\n');
        }
        s
    }
}

struct Cursor {
    order: Vec<usize>,
    at: usize,
}

impl Cursor {
    fn new(n: usize, rng: &mut RngStream) -> Self {
        Self { order: rng.permutation(n), at: 0 }
    }

    /// Next `b` indices of the running permutation, reshuffling when exhausted.
    fn take(&mut self, b: usize, rng: &mut RngStream) -> Vec<usize> {
        let mut out = Vec::with_capacity(b);
        while out.len() < b {
            if self.at == self.order.len() {
                self.order = rng.permutation(self.order.len());
                self.at = 0;
            }
            out.push(self.order[self.at]);
            self.at += 1;
        }
        out
    }
}

fn diverged(epoch: usize) -> impl Fn(GenError) -> GenError {
    move |e| match e {
        GenError::Diff(DiffError::NonFinite { op, .. }) => GenError::Diverged {
            epoch,
            detail: format!("non-finite {op}"),
        },
        GenError::Diff(DiffError::NonFiniteGradient(name)) => GenError::Diverged {
            epoch,
            detail: format!("non-finite gradient for {name}"),
        },
        other => other,
    }
}

fn finite(v: f64, epoch: usize, what: &str) -> Result<f64, GenError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GenError::Diverged {
            epoch,
            detail: format!("{what} is {v}"),
        })
    }
}

fn to_tensor<T: Scalar>(m: &FeatureMatrix) -> Tensor<T> {
    Tensor::from_fn(m.rows(), m.dims(), |r, c| T::of(m.get(r, c)))
}

fn noise<T: Scalar>(rng: &mut RngStream, rows: usize, cols: usize) -> Tensor<T> {
    Tensor::from_fn(rows, cols, |_, _| T::of(rng.normal()))
}

/// Trains `model` on `data` for `config.epochs` epochs.
///
/// Features are z-scored with statistics of `data` (kept on the model).
/// GAN epochs run `ceil(ceil(n / batch) / n_critic)` generator steps, each
/// preceded by `n_critic` critic steps. VAE epochs are one pass of
/// minibatches.
pub fn train<T: Scalar>(mut model: GenerativeModel<T>, data: &LabeledDataset, config: &TrainConfig) -> Result<(GenerativeModel<T>, LossTrace), GenError> {
    config.validate()?;
    if data.is_empty() {
        return Err(GenError::EmptyData);
    }
    if data.dims() != model.arch.data_dim {
        return Err(GenError::Shape(format!("data has {} dims, model expects {}", data.dims(), model.arch.data_dim)));
    }
    let labels = if model.is_conditional() {
        let l = data.labels().ok_or(GenError::NeedsLabels)?;
        if let Some((row, &label)) = l.iter().enumerate().find(|(_, &x)| x as usize >= model.arch.n_classes) {
            return Err(GenError::Label {
                row,
                label,
                n_classes: model.arch.n_classes,
            });
        }
        Some(l.to_vec())
    } else {
        None
    };
    let norm = model.norm.get_or_insert_with(|| Normalizer::fit(data.features())).clone();
    let x = to_tensor::<T>(&norm.transform(data.features()));
    let mut rng = RngStream::new(config.seed).split_named("train");
    let epochs_before = model.epochs_trained;
    let trace = match &mut model.net {
        Network::Gan(gan) => train_gan(gan, &x, labels.as_deref(), config, &mut rng)?,
        Network::Vae(vae) => train_vae(vae, &x, labels.as_deref(), config, &mut rng)?,
    };
    model.epochs_trained = epochs_before + config.epochs as u64;
    Ok((model, trace))
}

fn pick(labels: Option<&[u32]>, idx: &[usize]) -> Option<Vec<u32>> {
    labels.map(|l| idx.iter().map(|&i| l[i]).collect())
}

fn train_gan<T: Scalar>(gan: &mut GanModel<T>, x: &Tensor<T>, labels: Option<&[u32]>, config: &TrainConfig, rng: &mut RngStream) -> Result<LossTrace, GenError> {
    let n = x.rows();
    if n < 2 {
        return Err(GenError::BatchTooSmall(n));
    }
    let b = config.batch_size.min(n);
    let critic_iters = n.div_ceil(b);
    let gen_steps = critic_iters.div_ceil(gan.n_critic).max(1);
    let mut adam_c = AdamState::new(config.adam(), &gan.critic_params);
    let mut adam_g = AdamState::new(config.adam(), &gan.gen_params);
    let mut cursor = Cursor::new(n, rng);
    let mut trace = LossTrace::new(vec!["critic_loss", "wasserstein", "penalty", "generator_loss"]);
    for epoch in 0..config.epochs {
        let guard = diverged(epoch);
        let mut sums = [0.0; 4];
        for _ in 0..gen_steps {
            for _ in 0..gan.n_critic {
                let idx = cursor.take(b, rng);
                let real = x.select_rows(&idx);
                let lb = pick(labels, &idx);
                let z = noise::<T>(rng, b, gan.noise_dim);
                let fake = {
                    let mut t = Tape::new();
                    let gb = Bound::new(&mut t, &gan.gen_params, false);
                    let zv = t.constant(z);
                    let out = gan.generate(&mut t, &gb, zv, lb.as_deref()).map_err(&guard)?;
                    t.value(out).clone()
                };
                let alpha: Vec<T> = (0..b).map(|_| T::of(rng.uniform())).collect();
                let mut tape = Tape::new();
                let cb = Bound::new(&mut tape, &gan.critic_params, true);
                let loss = gan.critic_loss(&mut tape, &cb, &real, &fake, lb.as_deref(), &alpha).map_err(&guard)?;
                sums[0] += finite(tape.value(loss.total).item().to_f64_lossy(), epoch, "critic loss")?;
                sums[1] += tape.value(loss.wasserstein).item().to_f64_lossy();
                sums[2] += tape.value(loss.penalty).item().to_f64_lossy();
                let grads = tape.backward(loss.total).map_err(GenError::from).map_err(&guard)?;
                adam_c.step(&mut gan.critic_params, &grads).map_err(GenError::from).map_err(&guard)?;
            }
            let lb = labels.map(|l| (0..b).map(|_| l[rng.below(n)]).collect::<Vec<u32>>());
            let z = noise::<T>(rng, b, gan.noise_dim);
            let mut tape = Tape::new();
            let gb = Bound::new(&mut tape, &gan.gen_params, true);
            let cb = Bound::new(&mut tape, &gan.critic_params, false);
            let loss = gan.generator_loss(&mut tape, &gb, &cb, &z, lb.as_deref()).map_err(&guard)?;
            sums[3] += finite(tape.value(loss).item().to_f64_lossy(), epoch, "generator loss")?;
            let grads = tape.backward(loss).map_err(GenError::from).map_err(&guard)?;
            adam_g.step(&mut gan.gen_params, &grads).map_err(GenError::from).map_err(&guard)?;
        }
        let nc = (gen_steps * gan.n_critic) as f64;
        trace.rows.push(vec![sums[0] / nc, sums[1] / nc, sums[2] / nc, sums[3] / gen_steps as f64]);
    }
    Ok(trace)
}

fn train_vae<T: Scalar>(vae: &mut VaeModel<T>, x: &Tensor<T>, labels: Option<&[u32]>, config: &TrainConfig, rng: &mut RngStream) -> Result<LossTrace, GenError> {
    let n = x.rows();
    let b = config.batch_size.min(n);
    let mut adam = AdamState::new(config.adam(), &vae.params);
    let mut trace = LossTrace::new(vec!["loss", "kl"]);
    for epoch in 0..config.epochs {
        let guard = diverged(epoch);
        let order = rng.permutation(n);
        let (mut loss_sum, mut kl_sum) = (0.0, 0.0);
        for idx in order.chunks(b) {
            let batch = x.select_rows(idx);
            let lb = pick(labels, idx);
            let mut tape = Tape::new();
            let bound = Bound::new(&mut tape, &vae.params, true);
            let xv = tape.constant(batch);
            let extra = match &lb {
                Some(l) => Some(tape.constant(super::losses::one_hot(l, vae.n_classes)?)),
                None => None,
            };
            let pass = vae.pass(&mut tape, &bound, xv, extra, rng).map_err(&guard)?;
            let kl = vae.kl(&mut tape, &pass).map_err(&guard)?;
            let w = idx.len() as f64;
            loss_sum += w * finite(tape.value(pass.loss).item().to_f64_lossy(), epoch, "VAE loss")?;
            kl_sum += tape.value(kl).item().to_f64_lossy();
            let grads = tape.backward(pass.loss).map_err(GenError::from).map_err(&guard)?;
            adam.step(&mut vae.params, &grads).map_err(GenError::from).map_err(&guard)?;
        }
        trace.rows.push(vec![loss_sum / n as f64, kl_sum / n as f64]);
    }
    Ok(trace)
}

/// Draws `n` rows in feature space. Conditional models need one label per row.
pub fn sample<T: Scalar>(model: &GenerativeModel<T>, n: usize, labels: Option<&[u32]>, rng: &mut RngStream) -> Result<FeatureMatrix, GenError> {
    let a = &model.arch;
    match (model.is_conditional(), labels) {
        (true, None) => return Err(GenError::NeedsLabels),
        (false, Some(_)) => return Err(GenError::Unconditional),
        (true, Some(l)) if l.len() != n => return Err(GenError::Shape(format!("{} labels for {n} samples", l.len()))),
        _ => {}
    }
    let mut out = FeatureMatrix::empty(a.n_channels, a.n_bands, a.feature_kind);
    const CHUNK: usize = 512;
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let m = end - start;
        let lb = labels.map(|l| &l[start..end]);
        let z = noise::<T>(rng, m, a.latent_dim);
        let mut tape = Tape::new();
        let zv = tape.constant(z);
        let y = match &model.net {
            Network::Gan(g) => {
                let gb = Bound::new(&mut tape, &g.gen_params, false);
                g.generate(&mut tape, &gb, zv, lb)?
            }
            Network::Vae(v) => {
                let bound = Bound::new(&mut tape, &v.params, false);
                let extra = match lb {
                    Some(l) => Some(tape.constant(super::losses::one_hot(l, v.n_classes)?)),
                    None => None,
                };
                v.decode(&mut tape, &bound, zv, extra)?
            }
        };
        let vals = tape.value(y);
        let mut row = vec![0.0; a.data_dim];
        for r in 0..m {
            for (c, v) in row.iter_mut().enumerate() {
                *v = vals.get(r, c).to_f64_lossy();
            }
            if let Some(norm) = &model.norm {
                norm.inverse_row(&mut row);
            }
            out.push_row(&row).map_err(|e| GenError::Shape(e.to_string()))?;
        }
        start = end;
    }
    Ok(out)
}
