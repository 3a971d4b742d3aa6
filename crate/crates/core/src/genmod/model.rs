use serde::{Deserialize, Serialize};

use super::losses::{gradient_penalty, kl_diag_gaussian, one_hot, vae_objective};
use super::mlp::{Bound, InitScheme, Mlp, MlpSpec, OutputActivation};
use super::GenError;
use crate::dataio::Normalizer;
use crate::diffcore::{ParamSet, Tape, Tensor, Var};
use crate::featx::FeatureKind;
use crate::rng::RngStream;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Vae,
    Cvae,
    Wgan,
    Cwgan,
}

impl ModelKind {
    pub fn is_conditional(self) -> bool {
        matches!(self, ModelKind::Cvae | ModelKind::Cwgan)
    }

    pub fn is_gan(self) -> bool {
        matches!(self, ModelKind::Wgan | ModelKind::Cwgan)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Vae => "vae",
            ModelKind::Cvae => "cvae",
            ModelKind::Wgan => "wgan",
            ModelKind::Cwgan => "cwgan",
        }
    }

    /// The unconditional counterpart, used by the selective strategy.
    pub fn unconditional(self) -> Self {
        match self {
            ModelKind::Vae | ModelKind::Cvae => ModelKind::Vae,
            ModelKind::Wgan | ModelKind::Cwgan => ModelKind::Wgan,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vae" => Ok(ModelKind::Vae),
            "cvae" => Ok(ModelKind::Cvae),
            "wgan" => Ok(ModelKind::Wgan),
            "cwgan" => Ok(ModelKind::Cwgan),
            other => Err(format!("unknown model kind `{other}` (expected vae, cvae, wgan or cwgan)")),
        }
    }
}

/// Architecture descriptor shared by all four generator families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: ModelKind,
    pub data_dim: usize,
    /// Latent width (VAE) or noise width (GAN).
    pub latent_dim: usize,
    /// Zero for unconditional kinds.
    pub n_classes: usize,
    /// Hidden widths, used for both networks.
    pub hidden: Vec<usize>,
    pub lambda_gp: f64,
    pub n_critic: usize,
    pub init: InitScheme,
    pub n_channels: usize,
    pub n_bands: usize,
    pub feature_kind: FeatureKind,
}

impl Architecture {
    /// Three hidden layers of 256; latent 64 above 128 data dims, else 32.
    pub fn default_for(kind: ModelKind, n_channels: usize, n_bands: usize, n_classes: usize) -> Self {
        let data_dim = n_channels * n_bands;
        Self {
            kind,
            data_dim,
            latent_dim: if data_dim > 128 { 64 } else { 32 },
            n_classes: if kind.is_conditional() { n_classes } else { 0 },
            hidden: vec![256; 3],
            lambda_gp: 10.0,
            n_critic: 5,
            init: InitScheme::He,
            n_channels,
            n_bands,
            feature_kind: FeatureKind::De,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.data_dim == 0 || self.latent_dim == 0 {
            return Err(GenError::Config("data and latent widths must be positive".into()));
        }
        if self.n_channels * self.n_bands != self.data_dim {
            return Err(GenError::Config(format!(
                "layout {}×{} does not match data width {}",
                self.n_channels, self.n_bands, self.data_dim
            )));
        }
        if self.kind.is_conditional() != (self.n_classes > 0) {
            return Err(GenError::Config(format!(
                "{} needs {} classes",
                self.kind.as_str(),
                if self.kind.is_conditional() { "at least one" } else { "zero" }
            )));
        }
        if self.kind.is_gan() {
            if !(self.lambda_gp.is_finite() && self.lambda_gp > 0.0) {
                return Err(GenError::Config(format!("lambda_gp must be positive, got {}", self.lambda_gp)));
            }
            if self.n_critic == 0 {
                return Err(GenError::Config("n_critic must be at least 1".into()));
            }
        }
        Ok(())
    }

    fn mlp(&self, input: usize, output: usize) -> Result<MlpSpec, GenError> {
        let mut w = vec![input];
        w.extend_from_slice(&self.hidden);
        w.push(output);
        MlpSpec::new(w, OutputActivation::Linear, self.init)
    }
}

/// Encoder `q(z | x[, y])` and decoder `p(x | z[, y])`.
#[derive(Clone, Debug, PartialEq)]
pub struct VaeModel<T> {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub latent_dim: usize,
    pub n_classes: usize,
    pub params: ParamSet<T>,
}

/// Encoder and decoder outputs of one pass.
#[derive(Clone, Copy, Debug)]
pub struct VaePass {
    pub loss: Var,
    pub mu: Var,
    pub log_var: Var,
    pub x_hat: Var,
}

impl<T: Scalar> VaeModel<T> {
    fn with_extra(tape: &mut Tape<T>, x: Var, extra: Option<Var>) -> Result<Var, GenError> {
        Ok(match extra {
            Some(e) => tape.concat(&[x, e])?,
            None => x,
        })
    }

    /// Loss on batch `x`, conditioning both networks on `extra` when given.
    pub fn pass(&self, tape: &mut Tape<T>, bound: &Bound, x: Var, extra: Option<Var>, rng: &mut RngStream) -> Result<VaePass, GenError> {
        let l = self.latent_dim;
        let enc_in = Self::with_extra(tape, x, extra)?;
        let h = self.encoder.apply(tape, bound, enc_in)?;
        let mu = tape.slice(h, 0, l)?;
        let log_var = tape.slice(h, l, 2 * l)?;
        let z = tape.gaussian_sample(mu, log_var, rng)?;
        let dec_in = Self::with_extra(tape, z, extra)?;
        let x_hat = self.decoder.apply(tape, bound, dec_in)?;
        let loss = vae_objective(tape, x, x_hat, mu, log_var)?;
        Ok(VaePass { loss, mu, log_var, x_hat })
    }

    /// KL part of a pass, for trace reporting.
    pub fn kl(&self, tape: &mut Tape<T>, pass: &VaePass) -> Result<Var, GenError> {
        kl_diag_gaussian(tape, pass.mu, pass.log_var)
    }

    pub fn decode(&self, tape: &mut Tape<T>, bound: &Bound, z: Var, extra: Option<Var>) -> Result<Var, GenError> {
        let dec_in = Self::with_extra(tape, z, extra)?;
        self.decoder.apply(tape, bound, dec_in)
    }
}

/// Generator `G(z[, y])` and critic `D(x[, y])`.
#[derive(Clone, Debug, PartialEq)]
pub struct GanModel<T> {
    pub generator: Mlp,
    pub critic: Mlp,
    pub noise_dim: usize,
    pub n_classes: usize,
    pub lambda_gp: T,
    pub n_critic: usize,
    pub gen_params: ParamSet<T>,
    pub critic_params: ParamSet<T>,
}

/// Critic objective split into its two terms.
#[derive(Clone, Copy, Debug)]
pub struct CriticLoss {
    pub total: Var,
    pub wasserstein: Var,
    pub penalty: Var,
}

impl<T: Scalar> GanModel<T> {
    fn conditioned(&self, tape: &mut Tape<T>, x: Var, labels: Option<&[u32]>) -> Result<Var, GenError> {
        match (self.n_classes > 0, labels) {
            (true, Some(l)) => {
                if l.len() != tape.shape(x)[0] {
                    return Err(GenError::Shape(format!("{} labels for {} rows", l.len(), tape.shape(x)[0])));
                }
                let oh = tape.constant(one_hot(l, self.n_classes)?);
                Ok(tape.concat(&[x, oh])?)
            }
            (false, None) => Ok(x),
            (true, None) => Err(GenError::NeedsLabels),
            (false, Some(_)) => Err(GenError::Unconditional),
        }
    }

    pub fn critic_scores(&self, tape: &mut Tape<T>, critic: &Bound, x: Var, labels: Option<&[u32]>) -> Result<Var, GenError> {
        let inp = self.conditioned(tape, x, labels)?;
        self.critic.apply(tape, critic, inp)
    }

    pub fn generate(&self, tape: &mut Tape<T>, gen: &Bound, z: Var, labels: Option<&[u32]>) -> Result<Var, GenError> {
        if tape.shape(z)[1] != self.noise_dim {
            return Err(GenError::Shape(format!("noise has {} columns, expected {}", tape.shape(z)[1], self.noise_dim)));
        }
        let inp = self.conditioned(tape, z, labels)?;
        self.generator.apply(tape, gen, inp)
    }

    /// `mean D(x_g) − mean D(x_r) + penalty` at `x̂ = α x_r + (1 − α) x_g`.
    pub fn critic_loss(&self, tape: &mut Tape<T>, critic: &Bound, real: &Tensor<T>, fake: &Tensor<T>, labels: Option<&[u32]>, alpha: &[T]) -> Result<CriticLoss, GenError> {
        if real.shape() != fake.shape() {
            return Err(GenError::Shape(format!("real {:?} and fake {:?} batches differ", real.shape(), fake.shape())));
        }
        if real.rows() < 2 {
            return Err(GenError::BatchTooSmall(real.rows()));
        }
        let x_hat = super::losses::interpolate(real, fake, alpha)?;
        let r = tape.constant(real.clone());
        let f = tape.constant(fake.clone());
        let dr = self.critic_scores(tape, critic, r, labels)?;
        let df = self.critic_scores(tape, critic, f, labels)?;
        let mr = tape.mean(dr)?;
        let mf = tape.mean(df)?;
        let wasserstein = tape.sub(mf, mr)?;
        let xh = tape.input_with_grad("x_hat", x_hat);
        let penalty = gradient_penalty(tape, xh, self.lambda_gp, |t, v| self.critic_scores(t, critic, v, labels))?;
        let total = tape.add(wasserstein, penalty)?;
        Ok(CriticLoss { total, wasserstein, penalty })
    }

    /// `−mean D(G(z))`.
    pub fn generator_loss(&self, tape: &mut Tape<T>, gen: &Bound, critic: &Bound, z: &Tensor<T>, labels: Option<&[u32]>) -> Result<Var, GenError> {
        let zv = tape.constant(z.clone());
        let x = self.generate(tape, gen, zv, labels)?;
        let d = self.critic_scores(tape, critic, x, labels)?;
        let m = tape.mean(d)?;
        Ok(tape.neg(m)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Network<T> {
    Vae(VaeModel<T>),
    Gan(GanModel<T>),
}

/// A generator of one of the four families plus the metadata needed to
/// sample in feature space.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerativeModel<T> {
    pub arch: Architecture,
    pub net: Network<T>,
    /// Training-set statistics; samples are mapped back through them.
    pub norm: Option<Normalizer>,
    pub seed: u64,
    pub epochs_trained: u64,
}

impl<T: Scalar> GenerativeModel<T> {
    /// Fresh parameters drawn from a stream derived from `seed`.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self, GenError> {
        arch.validate()?;
        let mut rng = RngStream::new(seed).split_named("init");
        let (d, l, k) = (arch.data_dim, arch.latent_dim, arch.n_classes);
        let net = if arch.kind.is_gan() {
            let generator = Mlp::new(arch.mlp(l + k, d)?, "gen");
            let critic = Mlp::new(arch.mlp(d + k, 1)?, "critic");
            let mut gen_params = ParamSet::new();
            let mut critic_params = ParamSet::new();
            generator.init_params(&mut rng, &mut gen_params);
            critic.init_params(&mut rng, &mut critic_params);
            Network::Gan(GanModel {
                generator,
                critic,
                noise_dim: l,
                n_classes: k,
                lambda_gp: T::of(arch.lambda_gp),
                n_critic: arch.n_critic,
                gen_params,
                critic_params,
            })
        } else {
            let encoder = Mlp::new(arch.mlp(d + k, 2 * l)?, "enc");
            let decoder = Mlp::new(arch.mlp(l + k, d)?, "dec");
            let mut params = ParamSet::new();
            encoder.init_params(&mut rng, &mut params);
            decoder.init_params(&mut rng, &mut params);
            Network::Vae(VaeModel {
                encoder,
                decoder,
                latent_dim: l,
                n_classes: k,
                params,
            })
        };
        Ok(Self {
            arch,
            net,
            norm: None,
            seed,
            epochs_trained: 0,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.arch.kind
    }

    pub fn is_conditional(&self) -> bool {
        self.arch.kind.is_conditional()
    }

    /// Every parameter tensor, generator/decoder side first.
    pub fn param_sets(&self) -> Vec<&ParamSet<T>> {
        match &self.net {
            Network::Vae(v) => vec![&v.params],
            Network::Gan(g) => vec![&g.gen_params, &g.critic_params],
        }
    }

    pub fn param_sets_mut(&mut self) -> Vec<&mut ParamSet<T>> {
        match &mut self.net {
            Network::Vae(v) => vec![&mut v.params],
            Network::Gan(g) => vec![&mut g.gen_params, &mut g.critic_params],
        }
    }
}

/// VAE loss on an unconditional model.
pub fn vae_loss<T: Scalar>(model: &VaeModel<T>, tape: &mut Tape<T>, bound: &Bound, batch: &Tensor<T>, rng: &mut RngStream) -> Result<Var, GenError> {
    if model.n_classes > 0 {
        return Err(GenError::NeedsLabels);
    }
    let x = tape.constant(batch.clone());
    Ok(model.pass(tape, bound, x, None, rng)?.loss)
}

/// cVAE loss: the one-hot label is appended to the encoder input and to the latent code.
pub fn cvae_loss<T: Scalar>(model: &VaeModel<T>, tape: &mut Tape<T>, bound: &Bound, batch: &Tensor<T>, labels: &[u32], rng: &mut RngStream) -> Result<Var, GenError> {
    if model.n_classes == 0 {
        return Err(GenError::Unconditional);
    }
    if labels.len() != batch.rows() {
        return Err(GenError::Shape(format!("{} labels for {} rows", labels.len(), batch.rows())));
    }
    let x = tape.constant(batch.clone());
    let oh = tape.constant(one_hot(labels, model.n_classes)?);
    Ok(model.pass(tape, bound, x, Some(oh), rng)?.loss)
}
