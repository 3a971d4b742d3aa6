use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::GenError;
use crate::diffcore::{ParamSet, Tape, Tensor, Var};
use crate::rng::RngStream;
use crate::Scalar;

/// Output transform after the last affine layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    #[default]
    Linear,
    Tanh,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitScheme {
    /// `N(0, 2 / fan_in)` weights.
    #[default]
    He,
    /// `U(±sqrt(6 / (fan_in + fan_out)))` weights.
    Glorot,
}

impl InitScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            InitScheme::He => "he",
            InitScheme::Glorot => "glorot",
        }
    }
}

/// Fully connected ReLU network. `widths` lists input, hidden and output sizes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    widths: Vec<usize>,
    output: OutputActivation,
    init: InitScheme,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, output: OutputActivation, init: InitScheme) -> Result<Self, GenError> {
        if widths.len() < 3 {
            return Err(GenError::Config(format!("an MLP needs input, output and at least one hidden width, got {widths:?}")));
        }
        if widths.contains(&0) {
            return Err(GenError::Config(format!("MLP widths must be positive, got {widths:?}")));
        }
        Ok(Self { widths, output, init })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn output(&self) -> OutputActivation {
        self.output
    }

    pub fn init_scheme(&self) -> InitScheme {
        self.init
    }
}

fn weight_name(prefix: &str, l: usize) -> String {
    format!("{prefix}.l{l}.w")
}

fn bias_name(prefix: &str, l: usize) -> String {
    format!("{prefix}.l{l}.b")
}

/// An [`MlpSpec`] whose parameters live under `prefix` in some [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    prefix: String,
}

impl Mlp {
    pub fn new(spec: MlpSpec, prefix: &str) -> Self {
        Self { spec, prefix: prefix.to_string() }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Appends freshly initialised weights and zero biases to `params`.
    pub fn init_params<T: Scalar>(&self, rng: &mut RngStream, params: &mut ParamSet<T>) {
        for (l, w) in self.spec.widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weight = match self.spec.init {
                InitScheme::He => {
                    let s = (2.0 / fan_in as f64).sqrt();
                    Tensor::from_fn(fan_in, fan_out, |_, _| T::of(rng.normal() * s))
                }
                InitScheme::Glorot => {
                    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    Tensor::from_fn(fan_in, fan_out, |_, _| T::of((2.0 * rng.uniform() - 1.0) * a))
                }
            };
            params.push(weight_name(&self.prefix, l), weight);
            params.push(bias_name(&self.prefix, l), Tensor::zeros(1, fan_out));
        }
    }

    pub fn apply<T: Scalar>(&self, tape: &mut Tape<T>, bound: &Bound, x: Var) -> Result<Var, GenError> {
        let [_, c] = tape.shape(x);
        if c != self.spec.input_dim() {
            return Err(GenError::Shape(format!("{} expects {} input columns, got {c}", self.prefix, self.spec.input_dim())));
        }
        let mut h = x;
        let last = self.spec.n_layers() - 1;
        for l in 0..=last {
            let w = bound.get(&weight_name(&self.prefix, l))?;
            let b = bound.get(&bias_name(&self.prefix, l))?;
            h = tape.linear(h, w, b)?;
            if l < last {
                h = tape.relu(h)?;
            }
        }
        if self.spec.output == OutputActivation::Tanh {
            h = tape.tanh(h)?;
        }
        Ok(h)
    }
}

/// Name → tape variable map for one bound [`ParamSet`].
#[derive(Clone, Debug, Default)]
pub struct Bound(HashMap<String, Var>);

impl Bound {
    pub fn new<T: Scalar>(tape: &mut Tape<T>, params: &ParamSet<T>, trainable: bool) -> Self {
        let vars = params.bind(tape, trainable);
        Self(params.iter().map(|(n, _)| n.to_string()).zip(vars).collect())
    }

    pub fn get(&self, name: &str) -> Result<Var, GenError> {
        self.0.get(name).copied().ok_or_else(|| GenError::MissingParam(name.to_string()))
    }
}
