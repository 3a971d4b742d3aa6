//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 5 and 6 are directional experiments on synthetic data. They are
//! reported but do not set the exit status. Set `ACCEPTANCE_ONLY=3,7` to run
//! a subset.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use eegaug::augment::{augment_selective, AugmentError, AugmentationPlan, Method};
use eegaug::clf::{svm_fit, Classifier, ClassifierKind, ClassifierSpec, SvmConfig};
use eegaug::dataio::{decode_features, encode_features, load_features, save_features, synth_generate, LabeledDataset, Normalizer, SynthPreset, SynthSpec};
use eegaug::diffcore::{DiffError, Gradients, ParamSet, Tape, Tensor, Var};
use eegaug::evalx::{make_folds, run_cell, run_sweep, EvalSettings, GeneratorCache, NoStore, SweepReport, SweepSpec};
use eegaug::featx::{de_extract, FeatureKind, FeatureMatrix};
use eegaug::genmod::{
    cvae_loss, gradient_penalty, kl_diag_gaussian, kl_diag_gaussian_value, sample, train, vae_loss, Architecture, Bound, Checkpoint, GanModel, GenerativeModel, InitScheme,
    ModelKind, Network, TrainConfig, VaeModel,
};
use eegaug::rng::RngStream;

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn outcome(id: usize, pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { id, pass, detail: detail.into() }
}

// --- finite differences -----------------------------------------------------

const FD_STEP: f64 = 1e-5;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn fd_error(params: &ParamSet<f64>, grads: &Gradients<f64>, mut f: impl FnMut(&ParamSet<f64>) -> f64) -> f64 {
    let mut worst = 0.0f64;
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let analytic = grads
            .get(&name)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(params.get(&name).unwrap().rows(), params.get(&name).unwrap().cols()));
        for k in 0..analytic.len() {
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

fn randn(rng: &mut RngStream, rows: usize, cols: usize, scale: f64) -> Tensor<f64> {
    Tensor::from_fn(rows, cols, |_, _| rng.normal() * scale)
}

fn off_kink(rng: &mut RngStream, rows: usize, cols: usize, positive: bool) -> Tensor<f64> {
    Tensor::from_fn(rows, cols, |_, _| loop {
        let v = rng.normal();
        let v = if positive { v.abs() + 0.2 } else { v };
        if v.abs() > 1e-2 {
            break v;
        }
    })
}

/// Checks `eval` against central differences and returns the error.
fn check(params: &ParamSet<f64>, eval: impl Fn(&ParamSet<f64>, &mut Tape<f64>) -> Var) -> f64 {
    let mut tape = Tape::new();
    let loss = eval(params, &mut tape);
    let grads = tape.backward(loss).unwrap();
    fd_error(params, &grads, |p| {
        let mut t = Tape::new();
        let l = eval(p, &mut t);
        t.value(l).item()
    })
}

fn readout(tape: &mut Tape<f64>, y: Var, rng: &mut RngStream) -> Var {
    let [r, c] = tape.shape(y);
    let w = tape.constant(randn(rng, r, c, 1.0));
    let p = tape.mul(y, w).unwrap();
    tape.sum(p).unwrap()
}

type Unary = fn(&mut Tape<f64>, Var) -> Result<Var, DiffError>;
type Binary = fn(&mut Tape<f64>, Var, Var) -> Result<Var, DiffError>;

fn unary_ops() -> Vec<(&'static str, Unary, bool)> {
    vec![
        ("relu", |t, x| t.relu(x), false),
        ("sigmoid", |t, x| t.sigmoid(x), false),
        ("tanh", |t, x| t.tanh(x), false),
        ("exp", |t, x| t.exp(x), false),
        ("log", |t, x| t.log(x), true),
        ("sqrt", |t, x| t.sqrt(x), true),
        ("square", |t, x| t.square(x), false),
        ("recip", |t, x| t.recip(x), true),
        ("neg", |t, x| t.neg(x), false),
        ("scale", |t, x| t.scale(x, -1.7), false),
        ("add_scalar", |t, x| t.add_scalar(x, 0.3), false),
        ("clamp_min", |t, x| t.clamp_min(x, 0.0), false),
        ("transpose", |t, x| t.transpose(x), false),
        ("softmax", |t, x| t.softmax(x), false),
        ("log_softmax", |t, x| t.log_softmax(x), false),
        ("row_l2_norm", |t, x| t.row_l2_norm(x), false),
        ("row_sums", |t, x| t.row_sums(x), false),
        ("sum", |t, x| t.sum(x), false),
        ("mean", |t, x| t.mean(x), false),
        (
            "sum_to",
            |t, x| {
                let c = t.shape(x)[1];
                t.sum_to(x, [1, c])
            },
            false,
        ),
        (
            "slice",
            |t, x| {
                let c = t.shape(x)[1];
                t.slice(x, c / 2, c)
            },
            false,
        ),
        (
            "pad",
            |t, x| {
                let c = t.shape(x)[1];
                t.pad(x, 1, c + 2)
            },
            false,
        ),
    ]
}

fn binary_ops() -> Vec<(&'static str, Binary)> {
    vec![
        ("add", |t, a, b| t.add(a, b)),
        ("sub", |t, a, b| t.sub(a, b)),
        ("mul", |t, a, b| t.mul(a, b)),
        ("concat", |t, a, b| t.concat(&[a, b])),
    ]
}

fn jitter(m: &mut GenerativeModel<f64>, rng: &mut RngStream) {
    for set in m.param_sets_mut() {
        for (_, t) in set.iter_mut() {
            for v in t.data_mut() {
                *v += 0.3 * rng.normal();
            }
        }
    }
}

fn small_arch(kind: ModelKind, d: usize, latent: usize, classes: usize, hidden: Vec<usize>) -> Architecture {
    let mut a = Architecture::default_for(kind, d, 1, if kind.is_conditional() { classes } else { 0 });
    a.latent_dim = latent;
    a.hidden = hidden;
    a
}

fn vae_part(m: &GenerativeModel<f64>) -> &VaeModel<f64> {
    match &m.net {
        Network::Vae(v) => v,
        _ => unreachable!(),
    }
}

fn gan_part(m: &GenerativeModel<f64>) -> &GanModel<f64> {
    match &m.net {
        Network::Gan(g) => g,
        _ => unreachable!(),
    }
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(2024);
    let mut first = 0.0f64;
    let mut second = 0.0f64;
    let mut instances = 0usize;

    for (_, op, positive) in unary_ops() {
        for trial in 0..100 {
            let (rows, cols) = (1 + rng.below(4), 1 + rng.below(4));
            let mut p = ParamSet::new();
            p.push("x", off_kink(&mut rng, rows, cols, positive));
            let probe = rng.split(trial);
            first = first.max(check(&p, |p, t| {
                let x = p.bind(t, true)[0];
                let y = op(t, x).unwrap();
                readout(t, y, &mut probe.clone())
            }));
        }
        instances += 100;
    }
    for (name, op) in binary_ops() {
        for trial in 0..100 {
            let (rows, cols) = (1 + rng.below(4), 1 + rng.below(4));
            let rhs = match (name, trial % 4) {
                ("concat", _) => [rows, 1 + rng.below(3)],
                (_, 0) => [rows, cols],
                (_, 1) => [1, cols],
                (_, 2) => [rows, 1],
                _ => [1, 1],
            };
            let mut p = ParamSet::new();
            p.push("a", randn(&mut rng, rows, cols, 1.0));
            p.push("b", randn(&mut rng, rhs[0], rhs[1], 1.0));
            let probe = rng.split(trial);
            first = first.max(check(&p, |p, t| {
                let v = p.bind(t, true);
                let y = op(t, v[0], v[1]).unwrap();
                readout(t, y, &mut probe.clone())
            }));
        }
        instances += 100;
    }
    for trial in 0..100 {
        let (n, k, m) = (1 + rng.below(4), 1 + rng.below(4), 1 + rng.below(4));
        let mut p = ParamSet::new();
        p.push("a", randn(&mut rng, n, k, 1.0));
        p.push("w", randn(&mut rng, k, m, 1.0));
        p.push("b", randn(&mut rng, 1, m, 1.0));
        p.push("lv", randn(&mut rng, n, m, 0.5));
        let probe = rng.split(trial);
        first = first.max(check(&p, |p, t| {
            let mut r = probe.clone();
            let v = p.bind(t, true);
            let mu = t.linear(v[0], v[1], v[2]).unwrap();
            let mm = t.matmul(v[0], v[1]).unwrap();
            let s = t.add(mu, mm).unwrap();
            let z = t.gaussian_sample(s, v[3], &mut r).unwrap();
            readout(t, z, &mut r)
        }));
    }
    instances += 100;

    // Losses: KL, VAE/cVAE objective, generator loss, critic loss with penalty.
    for _ in 0..100 {
        let (n, d) = (1 + rng.below(4), 1 + rng.below(4));
        let mut p = ParamSet::new();
        p.push("mu", randn(&mut rng, n, d, 1.0));
        p.push("lv", randn(&mut rng, n, d, 0.7));
        first = first.max(check(&p, |p, t| {
            let v = p.bind(t, true);
            kl_diag_gaussian(t, v[0], v[1]).unwrap()
        }));
    }
    for trial in 0..100u64 {
        let conditional = trial % 2 == 1;
        let kind = if conditional { ModelKind::Cvae } else { ModelKind::Vae };
        let mut m = GenerativeModel::<f64>::new(small_arch(kind, 3, 2, 3, vec![5]), trial).unwrap();
        jitter(&mut m, &mut rng);
        let vae = vae_part(&m);
        let x = randn(&mut rng, 4, 3, 1.0);
        let labels: Vec<u32> = (0..4).map(|_| rng.below(3) as u32).collect();
        first = first.max(check(&vae.params, |p, t| {
            let b = Bound::new(t, p, true);
            let mut r = RngStream::new(trial);
            if conditional {
                cvae_loss(vae, t, &b, &x, &labels, &mut r).unwrap()
            } else {
                vae_loss(vae, t, &b, &x, &mut r).unwrap()
            }
        }));
    }
    for trial in 0..100u64 {
        let conditional = trial % 2 == 0;
        let kind = if conditional { ModelKind::Cwgan } else { ModelKind::Wgan };
        let mut m = GenerativeModel::<f64>::new(small_arch(kind, 3, 2, 3, vec![5]), 100 + trial).unwrap();
        jitter(&mut m, &mut rng);
        let g = gan_part(&m);
        let z = randn(&mut rng, 4, 2, 1.0);
        let labels: Vec<u32> = (0..4).map(|_| rng.below(3) as u32).collect();
        let lb = conditional.then_some(labels.as_slice());
        first = first.max(check(&g.gen_params, |p, t| {
            let gb = Bound::new(t, p, true);
            let cb = Bound::new(t, &g.critic_params, false);
            g.generator_loss(t, &gb, &cb, &z, lb).unwrap()
        }));
    }
    for trial in 0..100u64 {
        let conditional = trial % 2 == 0;
        let kind = if conditional { ModelKind::Cwgan } else { ModelKind::Wgan };
        let mut m = GenerativeModel::<f64>::new(small_arch(kind, 3, 2, 2, vec![6, 5]), trial).unwrap();
        jitter(&mut m, &mut rng);
        let g = gan_part(&m);
        let real = randn(&mut rng, 4, 3, 1.0);
        let fake = randn(&mut rng, 4, 3, 1.0);
        let alpha: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
        let labels: Vec<u32> = (0..4).map(|_| rng.below(2) as u32).collect();
        let lb = conditional.then_some(labels.as_slice());
        second = second.max(check(&g.critic_params, |p, t| {
            let cb = Bound::new(t, p, true);
            g.critic_loss(t, &cb, &real, &fake, lb, &alpha).unwrap().total
        }));
    }
    // Bare penalty on random tanh/relu critics.
    for trial in 0..100 {
        let (n, d, h) = (2 + rng.below(3), 2 + rng.below(3), 3 + rng.below(4));
        let x = randn(&mut rng, n, d, 1.0);
        let mut p = ParamSet::new();
        p.push("w1", randn(&mut rng, d, h, 0.8));
        p.push("b1", randn(&mut rng, 1, h, 0.2));
        p.push("w2", randn(&mut rng, h, 1, 0.8));
        let act: Unary = if trial % 2 == 0 { |t, x| t.relu(x) } else { |t, x| t.tanh(x) };
        second = second.max(check(&p, |p, t| {
            let v = p.bind(t, true);
            let xh = t.input_with_grad("x_hat", x.clone());
            gradient_penalty(t, xh, 10.0, |t, xv| {
                let h1 = t.linear(xv, v[0], v[1])?;
                let a1 = act(t, h1)?;
                Ok(t.matmul(a1, v[2])?)
            })
            .unwrap()
        }));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = first < 1e-4 && second < 1e-3 && secs < 120.0;
    outcome(
        1,
        pass,
        format!("{instances} op instances + 500 loss instances, first-order max rel err {first:.2e}, penalty path {second:.2e}, {secs:.1}s"),
    )
}

// --- closed forms -------------------------------------------------------------

fn kl_monte_carlo(mu: &[f64], lv: &[f64], n: usize, rng: &mut RngStream) -> f64 {
    let mut acc = 0.0;
    for _ in 0..n {
        for (m, l) in mu.iter().zip(lv) {
            let e = rng.normal();
            let z = m + (0.5 * l).exp() * e;
            acc += -0.5 * e * e - 0.5 * l + 0.5 * z * z;
        }
    }
    acc / n as f64
}

fn criterion2() -> Outcome {
    let mut rng = RngStream::new(71);
    let mut kl_worst = 0.0f64;
    for _ in 0..50 {
        let mu: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let lv: Vec<f64> = (0..4).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let exact = kl_diag_gaussian_value(&mu, &lv);
        let mc = kl_monte_carlo(&mu, &lv, 100_000, &mut rng);
        kl_worst = kl_worst.max((mc - exact).abs() / exact);
    }

    let target = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    let windows: Vec<f64> = (0..200)
        .map(|_| {
            let w = vec![(0..1000).map(|_| rng.normal()).collect::<Vec<f64>>()];
            de_extract(&w).unwrap()[0]
        })
        .collect();
    let de_mean = windows.iter().sum::<f64>() / windows.len() as f64;
    let de_err = (de_mean - target).abs() / target;

    let mut t = Tape::<f64>::new();
    let w = t.constant(Tensor::new(3, 1, vec![2.0, 1.0, 2.0]).unwrap());
    let xh = t.input_with_grad("x_hat", randn(&mut rng, 8, 3, 1.0));
    let gp = gradient_penalty(&mut t, xh, 10.0, |t, v| Ok(t.matmul(v, w)?)).unwrap();
    let gp = t.value(gp).item();

    let pass = kl_worst < 0.02 && de_err < 0.01 && gp == 40.0;
    outcome(
        2,
        pass,
        format!(
            "KL vs MC worst {:.3}% on 50 Gaussians; mean DE over 200 windows {de_mean:.5} (target {target:.5}, {:.3}%); linear-critic penalty {gp}",
            100.0 * kl_worst,
            100.0 * de_err
        ),
    )
}

// --- ring ---------------------------------------------------------------------

fn criterion3() -> Outcome {
    let start = Instant::now();
    let sigma = 0.1;
    let centers: Vec<(f64, f64)> = (0..8)
        .map(|k| {
            let a = k as f64 * std::f64::consts::FRAC_PI_4;
            (2.0 * a.cos(), 2.0 * a.sin())
        })
        .collect();
    let batch = 64;
    let mut covered_per_seed = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 0..5u64 {
        let t = Instant::now();
        let mut rng = RngStream::new(1000 + seed);
        let n = 50 * batch;
        let mut v = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (cx, cy) = centers[i % 8];
            v.push(cx + sigma * rng.normal());
            v.push(cy + sigma * rng.normal());
        }
        let data = LabeledDataset::unlabeled(FeatureMatrix::new(v, 2, 1, FeatureKind::De).unwrap());
        let mut arch = Architecture::default_for(ModelKind::Wgan, 2, 1, 0);
        arch.latent_dim = 2;
        arch.hidden = vec![64; 3];
        let m = GenerativeModel::<f32>::new(arch, seed).unwrap();
        // 50 critic batches per epoch at n_critic 5: 10 generator steps.
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: batch,
            lr: 1e-3,
            beta1: 0.0,
            beta2: 0.9,
            seed,
        };
        let (m, _) = train(m, &data, &cfg).unwrap();
        let s = sample(&m, 2000, None, &mut rng.split(9)).unwrap();
        let covered = centers
            .iter()
            .filter(|(cx, cy)| {
                let hits = (0..2000).filter(|&r| {
                    let x = s.row(r);
                    ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt() < 3.0 * sigma
                });
                hits.count() >= 40
            })
            .count();
        covered_per_seed.push(covered);
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let mean = covered_per_seed.iter().sum::<usize>() as f64 / 5.0;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        3,
        mean >= 6.0 && slowest < 300.0,
        format!("modes covered per seed {covered_per_seed:?}, mean {mean:.1} of 8, 2000 generator steps each, slowest seed {slowest:.1}s, {secs:.1}s total"),
    )
}

// --- selective loop -------------------------------------------------------------

fn blobs(n_per: usize, dims: usize, classes: u32, gap: f64, seed: u64) -> LabeledDataset {
    let mut rng = RngStream::new(seed);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for class in 0..classes {
        for _ in 0..n_per {
            for d in 0..dims {
                let centre = if d == class as usize % dims { gap } else { 0.0 };
                data.push(centre + 0.5 * rng.normal());
            }
            labels.push(class);
        }
    }
    LabeledDataset::new(FeatureMatrix::new(data, dims, 1, FeatureKind::De).unwrap(), labels, classes).unwrap()
}

fn criterion4() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let configs: [(u32, usize, f64, Method, f64, usize); 4] = [
        (2, 2, 4.0, Method::Svae, 0.9, 300),
        (3, 4, 4.0, Method::Svae, 0.8, 200),
        (2, 3, 3.0, Method::Swgan, 0.7, 150),
        (3, 3, 2.0, Method::Swgan, 0.6, 100),
    ];
    for (i, &(classes, dims, gap, method, threshold, n)) in configs.iter().enumerate() {
        let real = blobs(40, dims, classes, gap, i as u64);
        let kind = method.generator().unwrap();
        let cfg = TrainConfig {
            epochs: if kind.is_gan() { 60 } else { 100 },
            batch_size: 32,
            lr: 1e-3,
            beta1: if kind.is_gan() { 0.0 } else { 0.9 },
            beta2: if kind.is_gan() { 0.9 } else { 0.999 },
            seed: i as u64,
        };
        let mut arch = Architecture::default_for(kind, dims, 1, 0);
        arch.hidden = vec![32, 32];
        arch.latent_dim = 4;
        let gen = |d: &LabeledDataset, r: usize| -> Result<GenerativeModel<f32>, AugmentError> {
            let m = GenerativeModel::new(arch.clone(), r as u64)?;
            Ok(train(m, d, &cfg)?.0)
        };
        let norm = Normalizer::fit(real.features());
        let clf = |pool: &LabeledDataset| -> Result<Classifier, AugmentError> { Ok(Classifier::fit(&ClassifierSpec::svm(), pool, norm.clone(), 1)?) };
        let plan = AugmentationPlan::new(method, n).with_threshold(threshold).with_max_rounds(20);
        match augment_selective(&real, &plan, 5, gen, clf) {
            Ok(out) => {
                let above = out.provenance.iter().all(|p| p.confidence.is_some_and(|c| c > threshold));
                let rounds = out.provenance.iter().filter_map(|p| p.round).max().map_or(0, |r| r + 1);
                let ok = above && out.len() == n && rounds <= 20;
                pass &= ok;
                notes.push(format!(
                    "{method} t={threshold}: {} rows in {rounds} rounds{}",
                    out.len(),
                    if above { "" } else { ", confidence violation" }
                ));
            }
            Err(e) => {
                pass &= matches!(e, AugmentError::RoundsExhausted { rounds: 20, .. });
                notes.push(format!("{method} t={threshold}: {e}"));
            }
        }
    }
    let real = blobs(20, 3, 2, 3.0, 9);
    let norm = Normalizer::fit(real.features());
    let mut plan = AugmentationPlan::new(Method::Svae, 10).with_threshold(1.0).with_max_rounds(3);
    plan.candidates = Some(40);
    let arch = {
        let mut a = Architecture::default_for(ModelKind::Vae, 3, 1, 0);
        a.hidden = vec![16, 16];
        a.latent_dim = 4;
        a
    };
    let res = augment_selective(
        &real,
        &plan,
        3,
        |_: &LabeledDataset, r| -> Result<GenerativeModel<f32>, AugmentError> { Ok(GenerativeModel::new(arch.clone(), r as u64)?) },
        |pool: &LabeledDataset| -> Result<Classifier, AugmentError> { Ok(Classifier::fit(&ClassifierSpec::svm(), pool, norm.clone(), 1)?) },
    );
    let fired = matches!(res, Err(AugmentError::RoundsExhausted { accepted: 0, rounds: 3, .. }));
    pass &= fired;
    notes.push(format!("threshold 1.0 {}", if fired { "exhausts rounds" } else { "did not error" }));
    outcome(4, pass, notes.join("; "))
}

// --- directional sweeps -----------------------------------------------------------

const DIRECTIONAL_SEEDS: u64 = 10;
/// Seeds that also get the 2000 and 10000 cells.
const PEAK_SEEDS: u64 = 2;

fn directional_settings() -> EvalSettings {
    let mut s = EvalSettings::default();
    s.gan.lr = 1e-3;
    s.gen_hidden = Some(vec![128, 128]);
    s.latent_dim = Some(32);
    s.threshold = 0.6;
    s
}

fn scarce_set(seed: u64) -> LabeledDataset {
    let mut spec = SynthSpec::preset(SynthPreset::SeedLike, seed);
    spec.samples_per_class = 30;
    spec.separation = 3.0;
    synth_generate(&spec).unwrap()
}

fn mean_at(r: &SweepReport, count: usize) -> f64 {
    r.aggregate(Method::Swgan, ClassifierKind::Svm, count).map_or(f64::NAN, |a| a.mean)
}

fn swgan_sweep(seed: u64, counts: &[usize], settings: &EvalSettings) -> SweepReport {
    let spec = SweepSpec {
        methods: vec![Method::Swgan],
        classifiers: vec![ClassifierKind::Svm],
        counts: counts.to_vec(),
        seed,
        jobs: None,
    };
    let r = run_sweep(&scarce_set(seed), &spec, settings, &NoStore).unwrap();
    for f in &r.failures {
        eprintln!("seed {seed}: cell {} failed: {}", f.key.id(), f.reason);
    }
    r
}

fn criteria5_and_6() -> (Outcome, Outcome) {
    let settings = directional_settings();
    let start = Instant::now();
    let small = [0usize, 200, 500];
    let reports: Vec<SweepReport> = (0..DIRECTIONAL_SEEDS)
        .map(|seed| {
            let r = swgan_sweep(seed, &small, &settings);
            eprintln!(
                "seed {seed}: {} ({:.0}s)",
                small.iter().map(|&c| format!("{c}:{:.3}", mean_at(&r, c))).collect::<Vec<_>>().join(" "),
                start.elapsed().as_secs_f64()
            );
            r
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let gains: Vec<f64> = reports.iter().map(|r| mean_at(r, 500) - mean_at(r, 0)).collect();
    let gain = 100.0 * gains.iter().sum::<f64>() / gains.len() as f64;
    let five = outcome(
        5,
        gain >= 2.0 && secs < 1200.0,
        format!(
            "sWGAN@500 minus baseline, 5-fold SVM, {DIRECTIONAL_SEEDS} seeds: {gain:+.2} pp (per seed {}), {secs:.0}s",
            gains.iter().map(|g| format!("{:+.1}", 100.0 * g)).collect::<Vec<_>>().join(" ")
        ),
    );

    let counts = [0usize, 200, 500, 2000, 10000];
    let mut means = vec![0.0; counts.len()];
    for seed in 0..PEAK_SEEDS {
        let big = swgan_sweep(seed, &[0, 2000, 10000], &settings);
        eprintln!(
            "seed {seed}: 2000:{:.3} 10000:{:.3} ({:.0}s)",
            mean_at(&big, 2000),
            mean_at(&big, 10000),
            start.elapsed().as_secs_f64()
        );
        for (i, &c) in counts.iter().enumerate() {
            let r = if c > 500 { &big } else { &reports[seed as usize] };
            means[i] += mean_at(r, c) / PEAK_SEEDS as f64;
        }
    }
    let best = (0..counts.len())
        .filter(|&i| means[i].is_finite())
        .max_by(|&a, &b| means[a].total_cmp(&means[b]))
        .unwrap_or(0);
    let tail = if best + 1 == counts.len() {
        ""
    } else if means[best + 1..].iter().all(|m| *m < means[best]) {
        ", lower after the peak"
    } else {
        ", no decay after the peak"
    };
    let six = outcome(
        6,
        counts[best] > 0,
        format!(
            "mean accuracy over seeds 0..{PEAK_SEEDS}: {}; best at {}{tail}",
            counts.iter().zip(&means).map(|(c, m)| format!("{c}:{m:.3}")).collect::<Vec<_>>().join(" "),
            counts[best]
        ),
    );
    (five, six)
}

// --- SVM oracle ---------------------------------------------------------------------

const SIX_POINTS: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.5], [0.2, 1.5], [2.0, 2.0], [2.5, 0.8], [0.9, 0.6]];
const SIX_LABELS: [u32; 6] = [0, 0, 0, 1, 1, 1];

/// Best stationary point of the box-constrained dual over every split of
/// the coordinates into {0, free, upper}.
fn brute_force_dual(y: &[f64], u: f64) -> Vec<f64> {
    let x = &SIX_POINTS;
    let n = x.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * (x[i][0] * x[j][0] + x[i][1] * x[j][1] + 1.0));
    let objective = |a: &DVector<f64>| a.sum() - 0.5 * (a.transpose() * &q * a)[(0, 0)];
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| (code / 3usize.pow(i as u32)) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let mut a = DVector::from_fn(n, |i, _| if state[i] == 2 { u } else { 0.0 });
        if !free.is_empty() {
            let qff = DMatrix::from_fn(free.len(), free.len(), |r, c| q[(free[r], free[c])]);
            let fixed = &q * &a;
            let rhs = DVector::from_fn(free.len(), |r, _| 1.0 - fixed[free[r]]);
            let Some(sol) = qff.lu().solve(&rhs) else { continue };
            if sol.iter().any(|v| !v.is_finite() || *v < -1e-12 || *v > u + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let f = objective(&a);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, a));
        }
    }
    let a = best.unwrap().1;
    let mut wb = vec![0.0; 3];
    for i in 0..n {
        wb[0] += a[i] * y[i] * x[i][0];
        wb[1] += a[i] * y[i] * x[i][1];
        wb[2] += a[i] * y[i];
    }
    wb
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    1.0 - dot / (na * nb)
}

fn criterion7() -> Outcome {
    let flat: Vec<f64> = SIX_POINTS.iter().flatten().copied().collect();
    let data = LabeledDataset::new(FeatureMatrix::new(flat, 2, 1, FeatureKind::De).unwrap(), SIX_LABELS.to_vec(), 2).unwrap();
    let mut worst = 0.0f64;
    for &c in &[0.5, 3.0, 60.0] {
        let m = svm_fit(&data, c, &SvmConfig::default(), 11).unwrap();
        for class in 0..2usize {
            let y: Vec<f64> = SIX_LABELS.iter().map(|&l| if l as usize == class { 1.0 } else { -1.0 }).collect();
            let oracle = brute_force_dual(&y, c / 6.0);
            let ours = [m.weights[class].clone(), vec![m.bias[class]]].concat();
            worst = worst.max(cosine_distance(&ours, &oracle));
        }
    }
    outcome(
        7,
        worst < 1e-3,
        format!("worst weight cosine distance to the QP oracle {worst:.2e} over c in {{0.5, 3, 60}}, both one-vs-rest machines"),
    )
}

// --- determinism and leakage ---------------------------------------------------------

fn small_settings() -> EvalSettings {
    EvalSettings {
        gan: TrainConfig {
            epochs: 3,
            batch_size: 8,
            ..TrainConfig::gan_default(0)
        },
        vae: TrainConfig {
            epochs: 3,
            batch_size: 8,
            ..TrainConfig::vae_default(0)
        },
        gen_hidden: Some(vec![8, 8]),
        latent_dim: Some(3),
        threshold: 0.4,
        candidates: Some(50),
        svm: SvmConfig {
            c_grid: vec![0.1, 1.0, 10.0],
            ..Default::default()
        },
        ..EvalSettings::default()
    }
}

fn criterion8() -> Outcome {
    let mut spec = SynthSpec::preset(SynthPreset::DeapLike, 4);
    spec.n_classes = 3;
    spec.n_bands = 1;
    spec.samples_per_class = 12;
    spec.signal_rank = 2;
    spec.separation = 1.5;
    let data = synth_generate(&spec).unwrap();
    let settings = small_settings();
    let sweep = |jobs| SweepSpec {
        methods: Method::ALL.to_vec(),
        classifiers: vec![ClassifierKind::Svm],
        counts: vec![0, 20, 40],
        seed: 8,
        jobs,
    };
    let a = run_sweep(&data, &sweep(None), &settings, &NoStore).unwrap().to_csv();
    let b = run_sweep(&data, &sweep(None), &settings, &NoStore).unwrap().to_csv();
    let c = run_sweep(&data, &sweep(Some(1)), &settings, &NoStore).unwrap().to_csv();
    let identical = a == b && a == c;

    let folds = make_folds(data.labels().unwrap(), 5, 8).unwrap();
    let mut audits = 0;
    let mut dirty = 0;
    for method in Method::ALL {
        let cell = run_cell(&data, method, ClassifierKind::Svm, 20, &folds, &settings, 8, &GeneratorCache::new()).unwrap();
        for au in &cell.audits {
            audits += 1;
            let test: BTreeSet<_> = folds.test_indices(au.fold).iter().collect();
            let leaks = !au.is_clean() || au.fitted_on != folds.train_indices(au.fold) || au.fitted_on.iter().chain(&au.sources).any(|i| test.contains(i));
            dirty += leaks as usize;
        }
    }
    outcome(
        8,
        identical && dirty == 0,
        format!(
            "three sweeps ({} CSV bytes) {}; {audits} fold audits, {dirty} touching test rows",
            a.len(),
            if identical { "byte-identical" } else { "differ" }
        ),
    )
}

// --- formats ---------------------------------------------------------------------------

fn random_dataset(rng: &mut RngStream) -> LabeledDataset {
    let channels = 1 + rng.below(16);
    let bands = 1 + rng.below(5);
    let rows = rng.below(40);
    let kind = if rng.below(2) == 0 { FeatureKind::De } else { FeatureKind::Psd };
    let scale = 10f64.powi(rng.below(7) as i32 - 3);
    let data: Vec<f64> = (0..rows * channels * bands).map(|_| ((rng.normal() * scale) as f32) as f64).collect();
    let m = FeatureMatrix::new(data, channels, bands, kind).unwrap();
    if rng.below(3) == 0 {
        LabeledDataset::unlabeled(m)
    } else {
        let k = 1 + rng.below(4) as u32;
        let labels = (0..rows).map(|_| rng.below(k as usize) as u32).collect();
        LabeledDataset::new(m, labels, k).unwrap()
    }
}

fn criterion9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(909);
    let mut feature_ok = 0;
    for i in 0..100 {
        let d = random_dataset(&mut rng);
        let bytes = encode_features(&d);
        let path = dir.path().join(format!("f{i}.eafx"));
        save_features(&path, &d).unwrap();
        let back = load_features(&path).unwrap();
        let same = back == d && encode_features(&back) == bytes && decode_features(&bytes).unwrap() == d && std::fs::read(&path).unwrap() == bytes;
        feature_ok += same as usize;
    }
    let kinds = [ModelKind::Vae, ModelKind::Cvae, ModelKind::Wgan, ModelKind::Cwgan];
    let mut ckpt_ok = 0;
    for i in 0..100u64 {
        let kind = kinds[i as usize % 4];
        let channels = 1 + rng.below(6);
        let bands = 1 + rng.below(3);
        let classes = 2 + rng.below(3);
        let mut arch = Architecture::default_for(kind, channels, bands, if kind.is_conditional() { classes } else { 0 });
        arch.hidden = (0..1 + rng.below(3)).map(|_| 1 + rng.below(12)).collect();
        arch.latent_dim = 1 + rng.below(6);
        arch.init = if rng.below(2) == 0 { InitScheme::He } else { InitScheme::Glorot };
        let mut m = GenerativeModel::<f32>::new(arch, rng.below(1 << 30) as u64).unwrap();
        for set in m.param_sets_mut() {
            for (_, t) in set.iter_mut() {
                for v in t.data_mut() {
                    *v += rng.normal() as f32;
                }
            }
        }
        if i % 3 == 0 {
            let mean: Vec<f64> = (0..channels * bands).map(|_| rng.normal()).collect();
            let std: Vec<f64> = (0..channels * bands).map(|_| rng.uniform() + 0.1).collect();
            m.norm = Some(Normalizer::from_parts(mean, std));
        }
        m.epochs_trained = rng.below(1000) as u64;
        let bytes = m.to_checkpoint().encode();
        let path = dir.path().join(format!("m{i}.eagm"));
        m.to_checkpoint().save(&path).unwrap();
        let back = GenerativeModel::<f32>::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
        ckpt_ok += (back == m && back.to_checkpoint().encode() == bytes) as usize;
    }
    outcome(
        9,
        feature_ok == 100 && ckpt_ok == 100,
        format!("{feature_ok}/100 feature files and {ckpt_ok}/100 generator checkpoints round-trip bit-exactly"),
    )
}

fn main() {
    let only: Option<BTreeSet<usize>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |id: usize| only.as_ref().is_none_or(|s| s.contains(&id));
    let start = Instant::now();
    let mut results = Vec::new();
    let simple: [(usize, fn() -> Outcome); 7] = [
        (1, criterion1),
        (2, criterion2),
        (3, criterion3),
        (4, criterion4),
        (7, criterion7),
        (8, criterion8),
        (9, criterion9),
    ];
    for (id, run) in simple {
        if wanted(id) {
            let o = run();
            println!("criterion {}: {} {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
            results.push(o);
        }
    }
    if wanted(5) || wanted(6) {
        let (five, six) = criteria5_and_6();
        for o in [five, six] {
            if wanted(o.id) {
                println!("criterion {}: {} {} (directional, not gating)", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
            }
        }
    }
    println!("acceptance finished in {:.0}s", start.elapsed().as_secs_f64());
    if results.iter().any(|o| !o.pass) {
        std::process::exit(1);
    }
}
