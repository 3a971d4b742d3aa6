use std::collections::{BTreeMap, HashMap};

use crate::rng::RngStream;
use crate::Scalar;

use super::{DiffError, Tensor};

/// Clamp applied before `log` and `sqrt`.
pub const LOG_SQRT_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }

    #[cfg(test)]
    pub(crate) fn from_raw(id: usize) -> Self {
        Var(id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LeafKind {
    Param,
    Input,
    Constant,
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf(LeafKind),
    MatMul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, T),
    AddScalar(usize, T),
    SumTo(usize),
    BroadcastTo(usize),
    Relu(usize),
    Sigmoid(usize),
    Tanh(usize),
    Exp(usize),
    Ln(usize),
    Recip(usize),
    ClampMin(usize, T),
    Sqrt(usize),
    Square(usize),
    Concat(Vec<usize>),
    Slice(usize, usize, usize),
    Pad(usize, usize, usize),
    // Non-differentiable: gradient is zero almost everywhere.
    Step(usize),
    Above(usize, T),
    RowMax(usize),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf(_) => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Transpose(_) => "transpose",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::SumTo(_) => "sum_to",
            Op::BroadcastTo(_) => "broadcast_to",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Exp(_) => "exp",
            Op::Ln(_) => "ln",
            Op::Recip(_) => "recip",
            Op::ClampMin(..) => "clamp_min",
            Op::Sqrt(_) => "sqrt",
            Op::Square(_) => "square",
            Op::Concat(_) => "concat",
            Op::Slice(..) => "slice",
            Op::Pad(..) => "pad",
            Op::Step(_) => "step",
            Op::Above(..) => "above",
            Op::RowMax(_) => "row_max",
        }
    }

    fn inputs(&self) -> Vec<usize> {
        match self {
            Op::Leaf(_) => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Concat(parts) => parts.clone(),
            Op::Transpose(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a, _)
            | Op::SumTo(a)
            | Op::BroadcastTo(a)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Exp(a)
            | Op::Ln(a)
            | Op::Recip(a)
            | Op::ClampMin(a, _)
            | Op::Sqrt(a)
            | Op::Square(a)
            | Op::Slice(a, ..)
            | Op::Pad(a, ..)
            | Op::Step(a)
            | Op::Above(a, _)
            | Op::RowMax(a) => vec![*a],
        }
    }

    fn differentiable(&self) -> bool {
        !matches!(self, Op::Step(_) | Op::Above(..) | Op::RowMax(_))
    }
}

#[derive(Clone, Debug)]
struct Node<T> {
    op: Op<T>,
    value: Tensor<T>,
    name: Option<String>,
    requires_grad: bool,
}

/// Gradients keyed by parameter name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients<T> {
    by_name: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.by_name.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, grad: Tensor<T>) {
        self.by_name.insert(name.into(), grad);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.by_name.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }
}

fn broadcast_shape(a: [usize; 2], b: [usize; 2]) -> Option<[usize; 2]> {
    let dim = |x: usize, y: usize| {
        if x == y {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else if y == 1 {
            Some(x)
        } else {
            None
        }
    };
    Some([dim(a[0], b[0])?, dim(a[1], b[1])?])
}

fn zip_broadcast<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, out: [usize; 2], f: impl Fn(T, T) -> T) -> Tensor<T> {
    if a.shape() == out && b.shape() == out {
        let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
        return Tensor::new(out[0], out[1], data).expect("shape preserved");
    }
    Tensor::from_fn(out[0], out[1], |r, c| {
        let x = a.get(if a.rows() == 1 { 0 } else { r }, if a.cols() == 1 { 0 } else { c });
        let y = b.get(if b.rows() == 1 { 0 } else { r }, if b.cols() == 1 { 0 } else { c });
        f(x, y)
    })
}

fn sum_to<T: Scalar>(x: &Tensor<T>, shape: [usize; 2]) -> Tensor<T> {
    if x.shape() == shape {
        return x.clone();
    }
    let mut out = Tensor::zeros(shape[0], shape[1]);
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let (tr, tc) = (if shape[0] == 1 { 0 } else { r }, if shape[1] == 1 { 0 } else { c });
            let v = out.get(tr, tc) + x.get(r, c);
            out.set(tr, tc, v);
        }
    }
    out
}

fn broadcast_to<T: Scalar>(x: &Tensor<T>, shape: [usize; 2]) -> Tensor<T> {
    if x.shape() == shape {
        return x.clone();
    }
    Tensor::from_fn(shape[0], shape[1], |r, c| x.get(if x.rows() == 1 { 0 } else { r }, if x.cols() == 1 { 0 } else { c }))
}

/// Reverse-mode computation record.
///
/// Operations evaluate eagerly and append a node; node order is therefore a
/// topological order. [`Tape::grad`] records the backward pass as ordinary
/// nodes, so its results can feed a second backward pass.
#[derive(Clone, Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    outputs: BTreeMap<String, usize>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn leaf(&mut self, name: Option<String>, kind: LeafKind, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf(kind),
            value,
            name,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf; included in [`Tape::backward`].
    pub fn param(&mut self, name: impl Into<String>, value: Tensor<T>) -> Var {
        self.leaf(Some(name.into()), LeafKind::Param, value, true)
    }

    /// Named input that can be rebound by [`Tape::forward`].
    pub fn input(&mut self, name: impl Into<String>, value: Tensor<T>) -> Var {
        self.leaf(Some(name.into()), LeafKind::Input, value, false)
    }

    /// Named input whose gradient is wanted (e.g. the penalty interpolates).
    pub fn input_with_grad(&mut self, name: impl Into<String>, value: Tensor<T>) -> Var {
        self.leaf(Some(name.into()), LeafKind::Input, value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(None, LeafKind::Constant, value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Copy of `v`'s current value as a constant (gradient stops here).
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.constant(value)
    }

    pub fn mark_output(&mut self, name: impl Into<String>, v: Var) {
        self.outputs.insert(name.into(), v.0);
    }

    fn check(&self, v: Var) -> Result<(), DiffError> {
        if v.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(DiffError::NotOnTape { node: v.0 })
        }
    }

    fn eval(&self, node: usize, op: &Op<T>) -> Result<Tensor<T>, DiffError> {
        let val = |i: usize| &self.nodes[i].value;
        let mismatch = |a: usize, b: usize| DiffError::ShapeMismatch {
            node,
            op: op.name(),
            left: val(a).shape(),
            right: val(b).shape(),
        };
        let out = match op {
            Op::Leaf(_) => unreachable!("leaves are not evaluated"),
            Op::MatMul(a, b) => {
                if val(*a).cols() != val(*b).rows() {
                    return Err(mismatch(*a, *b));
                }
                val(*a).matmul(val(*b))
            }
            Op::Transpose(a) => val(*a).transpose(),
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                let shape = broadcast_shape(val(*a).shape(), val(*b).shape()).ok_or_else(|| mismatch(*a, *b))?;
                match op {
                    Op::Add(..) => zip_broadcast(val(*a), val(*b), shape, |x, y| x + y),
                    Op::Sub(..) => zip_broadcast(val(*a), val(*b), shape, |x, y| x - y),
                    _ => zip_broadcast(val(*a), val(*b), shape, |x, y| x * y),
                }
            }
            Op::Scale(a, s) => {
                let s = *s;
                val(*a).map(|x| x * s)
            }
            Op::AddScalar(a, s) => {
                let s = *s;
                val(*a).map(|x| x + s)
            }
            // Target shapes are carried by the node value; evaluation is
            // driven from `sum_to`/`broadcast_to`/replay with the known shape.
            Op::SumTo(_) | Op::BroadcastTo(_) => unreachable!("shape-carrying ops evaluated separately"),
            Op::Relu(a) => val(*a).map(|x| if x > T::zero() { x } else { T::zero() }),
            Op::Sigmoid(a) => val(*a).map(|x| T::one() / (T::one() + (-x).exp())),
            Op::Tanh(a) => val(*a).map(|x| x.tanh()),
            Op::Exp(a) => val(*a).map(|x| x.exp()),
            Op::Ln(a) => val(*a).map(|x| x.ln()),
            Op::Recip(a) => val(*a).map(|x| x.recip()),
            Op::ClampMin(a, lo) => {
                let lo = *lo;
                val(*a).map(|x| if x > lo { x } else { lo })
            }
            Op::Sqrt(a) => val(*a).map(|x| x.sqrt()),
            Op::Square(a) => val(*a).map(|x| x * x),
            Op::Concat(parts) => {
                let rows = val(parts[0]).rows();
                for &p in parts {
                    if val(p).rows() != rows {
                        return Err(mismatch(parts[0], p));
                    }
                }
                let cols: usize = parts.iter().map(|&p| val(p).cols()).sum();
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for &p in parts {
                        data.extend_from_slice(val(p).row(r));
                    }
                }
                Tensor::new(rows, cols, data)?
            }
            Op::Slice(a, start, end) => {
                let x = val(*a);
                if *start >= *end || *end > x.cols() {
                    return Err(DiffError::ShapeMismatch {
                        node,
                        op: op.name(),
                        left: x.shape(),
                        right: [*start, *end],
                    });
                }
                Tensor::from_fn(x.rows(), end - start, |r, c| x.get(r, start + c))
            }
            Op::Pad(a, start, total) => {
                let x = val(*a);
                if start + x.cols() > *total {
                    return Err(DiffError::ShapeMismatch {
                        node,
                        op: op.name(),
                        left: x.shape(),
                        right: [*start, *total],
                    });
                }
                Tensor::from_fn(x.rows(), *total, |r, c| if c >= *start && c < start + x.cols() { x.get(r, c - start) } else { T::zero() })
            }
            Op::Step(a) => val(*a).map(|x| if x > T::zero() { T::one() } else { T::zero() }),
            Op::Above(a, lo) => {
                let lo = *lo;
                val(*a).map(|x| if x > lo { T::one() } else { T::zero() })
            }
            Op::RowMax(a) => {
                let x = val(*a);
                Tensor::from_fn(x.rows(), 1, |r, _| x.row(r).iter().copied().fold(T::neg_infinity(), T::max))
            }
        };
        if !out.is_finite() {
            return Err(DiffError::NonFinite { node, op: op.name() });
        }
        Ok(out)
    }

    fn push(&mut self, op: Op<T>) -> Result<Var, DiffError> {
        let inputs = op.inputs();
        for &i in &inputs {
            self.check(Var(i))?;
        }
        let node = self.nodes.len();
        let value = self.eval(node, &op)?;
        let requires_grad = op.differentiable() && inputs.iter().any(|&i| self.nodes[i].requires_grad);
        self.nodes.push(Node {
            op,
            value,
            name: None,
            requires_grad,
        });
        Ok(Var(node))
    }

    fn push_shaped(&mut self, op: Op<T>, target: [usize; 2]) -> Result<Var, DiffError> {
        let node = self.nodes.len();
        let (a, value) = match &op {
            Op::SumTo(a) | Op::BroadcastTo(a) => {
                self.check(Var(*a))?;
                let x = &self.nodes[*a].value;
                let ok = |from: usize, to: usize| from == to || to == 1;
                let valid = match op {
                    Op::SumTo(_) => ok(x.rows(), target[0]) && ok(x.cols(), target[1]),
                    _ => ok(target[0], x.rows()) && ok(target[1], x.cols()),
                };
                if !valid || target[0] == 0 || target[1] == 0 {
                    return Err(DiffError::ShapeMismatch {
                        node,
                        op: op.name(),
                        left: x.shape(),
                        right: target,
                    });
                }
                let v = match op {
                    Op::SumTo(_) => sum_to(x, target),
                    _ => broadcast_to(x, target),
                };
                (*a, v)
            }
            _ => unreachable!(),
        };
        if !value.is_finite() {
            return Err(DiffError::NonFinite { node, op: op.name() });
        }
        let requires_grad = self.nodes[a].requires_grad;
        self.nodes.push(Node {
            op,
            value,
            name: None,
            requires_grad,
        });
        Ok(Var(node))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.push(Op::MatMul(a.0, b.0))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Transpose(a.0))
    }

    /// Elementwise sum with row/column broadcasting of size-1 dimensions.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.push(Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.push(Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        self.push(Op::Mul(a.0, b.0))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Result<Var, DiffError> {
        self.push(Op::Scale(a.0, s))
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, DiffError> {
        self.scale(a, -T::one())
    }

    pub fn add_scalar(&mut self, a: Var, s: T) -> Result<Var, DiffError> {
        self.push(Op::AddScalar(a.0, s))
    }

    /// Sums over the dimensions where `shape` is 1.
    pub fn sum_to(&mut self, a: Var, shape: [usize; 2]) -> Result<Var, DiffError> {
        self.push_shaped(Op::SumTo(a.0), shape)
    }

    pub fn broadcast_to(&mut self, a: Var, shape: [usize; 2]) -> Result<Var, DiffError> {
        self.push_shaped(Op::BroadcastTo(a.0), shape)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, DiffError> {
        self.sum_to(a, [1, 1])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, DiffError> {
        let n = self.value(a).len();
        let s = self.sum(a)?;
        self.scale(s, T::one() / T::of(n as f64))
    }

    /// Per-row sums, shape `rows×1`.
    pub fn row_sums(&mut self, a: Var) -> Result<Var, DiffError> {
        let rows = self.value(a).rows();
        self.sum_to(a, [rows, 1])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Relu(a.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Sigmoid(a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Tanh(a.0))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Exp(a.0))
    }

    /// Natural log of `max(a, 1e-12)`.
    pub fn log(&mut self, a: Var) -> Result<Var, DiffError> {
        let c = self.clamp_min(a, T::of(LOG_SQRT_FLOOR))?;
        self.push(Op::Ln(c.0))
    }

    pub fn recip(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Recip(a.0))
    }

    pub fn clamp_min(&mut self, a: Var, lo: T) -> Result<Var, DiffError> {
        self.push(Op::ClampMin(a.0, lo))
    }

    /// Square root of `max(a, 1e-12)`.
    pub fn sqrt(&mut self, a: Var) -> Result<Var, DiffError> {
        self.sqrt_floor(a, T::of(LOG_SQRT_FLOOR))
    }

    /// Square root of `max(a, floor)`; `floor` must be positive.
    pub fn sqrt_floor(&mut self, a: Var, floor: T) -> Result<Var, DiffError> {
        let c = self.clamp_min(a, floor)?;
        self.push(Op::Sqrt(c.0))
    }

    pub fn square(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Square(a.0))
    }

    /// Column-wise concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, DiffError> {
        if parts.is_empty() {
            return Err(DiffError::EmptyConcat);
        }
        self.push(Op::Concat(parts.iter().map(|v| v.0).collect()))
    }

    /// Columns `start..end`.
    pub fn slice(&mut self, a: Var, start: usize, end: usize) -> Result<Var, DiffError> {
        self.push(Op::Slice(a.0, start, end))
    }

    /// Embeds `a` at column offset `start` in a zero tensor with `total` columns.
    pub fn pad(&mut self, a: Var, start: usize, total: usize) -> Result<Var, DiffError> {
        self.push(Op::Pad(a.0, start, total))
    }

    fn step(&mut self, a: Var) -> Result<Var, DiffError> {
        self.push(Op::Step(a.0))
    }

    fn above(&mut self, a: Var, lo: T) -> Result<Var, DiffError> {
        self.push(Op::Above(a.0, lo))
    }

    /// Euclidean norm of each row, shape `rows×1`.
    pub fn row_l2_norm(&mut self, a: Var) -> Result<Var, DiffError> {
        let sq = self.square(a)?;
        let s = self.row_sums(sq)?;
        self.sqrt(s)
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Var) -> Result<Var, DiffError> {
        let m = self.push(Op::RowMax(a.0))?;
        let shifted = self.sub(a, m)?;
        let e = self.exp(shifted)?;
        let s = self.row_sums(e)?;
        let inv = self.recip(s)?;
        self.mul(e, inv)
    }

    /// Row-wise log-softmax, stable for large logits.
    pub fn log_softmax(&mut self, a: Var) -> Result<Var, DiffError> {
        let m = self.push(Op::RowMax(a.0))?;
        let shifted = self.sub(a, m)?;
        let e = self.exp(shifted)?;
        let s = self.row_sums(e)?;
        let ls = self.log(s)?;
        self.sub(shifted, ls)
    }

    /// Reparameterized draw `mu + exp(logvar / 2) * eps`, `eps ~ N(0, I)` from `rng`.
    pub fn gaussian_sample(&mut self, mu: Var, log_var: Var, rng: &mut RngStream) -> Result<Var, DiffError> {
        let [r, c] = self.shape(mu);
        if self.shape(log_var) != [r, c] {
            return Err(DiffError::ShapeMismatch {
                node: self.nodes.len(),
                op: "gaussian_sample",
                left: [r, c],
                right: self.shape(log_var),
            });
        }
        let eps = Tensor::from_fn(r, c, |_, _| T::of(rng.normal()));
        let eps = self.constant(eps);
        let half = self.scale(log_var, T::of(0.5))?;
        let std = self.exp(half)?;
        let noise = self.mul(std, eps)?;
        self.add(mu, noise)
    }

    /// `x · w + b` with `b` broadcast over rows.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, DiffError> {
        let xw = self.matmul(x, w)?;
        self.add(xw, b)
    }

    /// Re-evaluates every node with rebound named leaves and returns the marked outputs.
    ///
    /// Constants (including drawn reparameterization noise) keep their recorded
    /// values, so replaying with the original inputs reproduces the recorded
    /// outputs bit for bit.
    pub fn forward(&mut self, inputs: &HashMap<String, Tensor<T>>) -> Result<BTreeMap<String, Tensor<T>>, DiffError> {
        let mut bound = 0;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            if let (Op::Leaf(kind), Some(name)) = (&node.op, &node.name) {
                if *kind != LeafKind::Constant {
                    if let Some(t) = inputs.get(name) {
                        if t.shape() != node.value.shape() {
                            return Err(DiffError::ShapeMismatch {
                                node: i,
                                op: "bind",
                                left: node.value.shape(),
                                right: t.shape(),
                            });
                        }
                        node.value = t.clone();
                        bound += 1;
                    }
                }
            }
        }
        if bound < inputs.len() {
            let known: Vec<&str> = self.nodes.iter().filter_map(|n| n.name.as_deref()).collect();
            if let Some(missing) = inputs.keys().find(|k| !known.contains(&k.as_str())) {
                return Err(DiffError::UnknownInput(missing.clone()));
            }
        }
        for i in 0..self.nodes.len() {
            let op = self.nodes[i].op.clone();
            let value = match &op {
                Op::Leaf(_) => continue,
                Op::SumTo(a) | Op::BroadcastTo(a) => {
                    let target = self.nodes[i].value.shape();
                    let x = &self.nodes[*a].value;
                    if matches!(op, Op::SumTo(_)) {
                        sum_to(x, target)
                    } else {
                        broadcast_to(x, target)
                    }
                }
                other => self.eval(i, other)?,
            };
            if value.shape() != self.nodes[i].value.shape() {
                return Err(DiffError::ShapeMismatch {
                    node: i,
                    op: op.name(),
                    left: self.nodes[i].value.shape(),
                    right: value.shape(),
                });
            }
            self.nodes[i].value = value;
        }
        Ok(self.outputs.iter().map(|(k, &i)| (k.clone(), self.nodes[i].value.clone())).collect())
    }

    /// Differentiates a scalar `output` with respect to each of `wrt`.
    ///
    /// The backward pass is recorded on the tape: the returned vars are
    /// differentiable functions of every leaf, which is what double
    /// backpropagation needs.
    pub fn grad(&mut self, output: Var, wrt: &[Var]) -> Result<Vec<Var>, DiffError> {
        self.check(output)?;
        for &w in wrt {
            self.check(w)?;
        }
        let shape = self.shape(output);
        if shape != [1, 1] {
            return Err(DiffError::NotScalar { node: output.0, shape });
        }
        let n = output.0 + 1;
        let mut dep = vec![false; n];
        for &w in wrt {
            if w.0 < n {
                dep[w.0] = true;
            }
        }
        for i in 0..n {
            if dep[i] {
                continue;
            }
            let op = &self.nodes[i].op;
            if op.differentiable() {
                dep[i] = op.inputs().iter().any(|&j| dep[j]);
            }
        }
        let mut adjoint: Vec<Option<Var>> = vec![None; n];
        if dep[output.0] {
            let seed = self.constant(Tensor::ones(1, 1));
            adjoint[output.0] = Some(seed);
        }
        for i in (0..n).rev() {
            let Some(g) = adjoint[i] else { continue };
            if !dep[i] {
                continue;
            }
            for (j, contrib) in self.vjp(i, g, &dep)? {
                adjoint[j] = Some(match adjoint[j] {
                    Some(prev) => self.add(prev, contrib)?,
                    None => contrib,
                });
            }
        }
        wrt.iter()
            .map(|&w| match adjoint.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let [r, c] = self.shape(w);
                    Ok(self.constant(Tensor::zeros(r, c)))
                }
            })
            .collect()
    }

    /// Gradient of a scalar with respect to one bound input; differentiable.
    pub fn input_gradient(&mut self, output: Var, wrt_input: Var) -> Result<Var, DiffError> {
        self.check(wrt_input)?;
        if !matches!(self.nodes[wrt_input.0].op, Op::Leaf(LeafKind::Input | LeafKind::Param)) {
            return Err(DiffError::NotAnInput { node: wrt_input.0 });
        }
        Ok(self.grad(output, &[wrt_input])?[0])
    }

    /// Gradients of a scalar with respect to every trainable leaf.
    pub fn backward(&mut self, output: Var) -> Result<Gradients<T>, DiffError> {
        let params: Vec<(String, Var)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match (&n.op, &n.name) {
                (Op::Leaf(LeafKind::Param), Some(name)) => Some((name.clone(), Var(i))),
                _ => None,
            })
            .collect();
        let vars: Vec<Var> = params.iter().map(|(_, v)| *v).collect();
        let grads = self.grad(output, &vars)?;
        let mut out = Gradients::default();
        for ((name, _), g) in params.into_iter().zip(grads) {
            out.insert(name, self.value(g).clone());
        }
        Ok(out)
    }

    fn vjp(&mut self, i: usize, g: Var, dep: &[bool]) -> Result<Vec<(usize, Var)>, DiffError> {
        let op = self.nodes[i].op.clone();
        let y = Var(i);
        let mut out = Vec::new();
        let shape_of = |t: &Self, j: usize| t.nodes[j].value.shape();
        match op {
            Op::Leaf(_) | Op::Step(_) | Op::Above(..) | Op::RowMax(_) => {}
            Op::MatMul(a, b) => {
                if dep[a] {
                    let bt = self.transpose(Var(b))?;
                    out.push((a, self.matmul(g, bt)?));
                }
                if dep[b] {
                    let at = self.transpose(Var(a))?;
                    out.push((b, self.matmul(at, g)?));
                }
            }
            Op::Transpose(a) => out.push((a, self.transpose(g)?)),
            Op::Add(a, b) | Op::Sub(a, b) => {
                let is_sub = matches!(op, Op::Sub(..));
                if dep[a] {
                    let s = shape_of(self, a);
                    out.push((a, self.sum_to(g, s)?));
                }
                if dep[b] {
                    let s = shape_of(self, b);
                    let gb = if is_sub { self.neg(g)? } else { g };
                    out.push((b, self.sum_to(gb, s)?));
                }
            }
            Op::Mul(a, b) => {
                if dep[a] {
                    let s = shape_of(self, a);
                    let t = self.mul(g, Var(b))?;
                    out.push((a, self.sum_to(t, s)?));
                }
                if dep[b] {
                    let s = shape_of(self, b);
                    let t = self.mul(g, Var(a))?;
                    out.push((b, self.sum_to(t, s)?));
                }
            }
            Op::Scale(a, s) => out.push((a, self.scale(g, s)?)),
            Op::AddScalar(a, _) => out.push((a, g)),
            Op::SumTo(a) => {
                let s = shape_of(self, a);
                out.push((a, self.broadcast_to(g, s)?));
            }
            Op::BroadcastTo(a) => {
                let s = shape_of(self, a);
                out.push((a, self.sum_to(g, s)?));
            }
            Op::Relu(a) => {
                let mask = self.step(Var(a))?;
                out.push((a, self.mul(g, mask)?));
            }
            Op::Sigmoid(a) => {
                let one_minus = self.scale(y, -T::one())?;
                let one_minus = self.add_scalar(one_minus, T::one())?;
                let d = self.mul(y, one_minus)?;
                out.push((a, self.mul(g, d)?));
            }
            Op::Tanh(a) => {
                let y2 = self.square(y)?;
                let d = self.scale(y2, -T::one())?;
                let d = self.add_scalar(d, T::one())?;
                out.push((a, self.mul(g, d)?));
            }
            Op::Exp(a) => out.push((a, self.mul(g, y)?)),
            Op::Ln(a) => {
                let r = self.recip(Var(a))?;
                out.push((a, self.mul(g, r)?));
            }
            Op::Recip(a) => {
                let y2 = self.square(y)?;
                let d = self.scale(y2, -T::one())?;
                out.push((a, self.mul(g, d)?));
            }
            Op::ClampMin(a, lo) => {
                let mask = self.above(Var(a), lo)?;
                out.push((a, self.mul(g, mask)?));
            }
            Op::Sqrt(a) => {
                let r = self.recip(y)?;
                let d = self.scale(r, T::of(0.5))?;
                out.push((a, self.mul(g, d)?));
            }
            Op::Square(a) => {
                let d = self.scale(Var(a), T::of(2.0))?;
                out.push((a, self.mul(g, d)?));
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let w = self.nodes[p].value.cols();
                    if dep[p] {
                        out.push((p, self.slice(g, offset, offset + w)?));
                    }
                    offset += w;
                }
            }
            Op::Slice(a, start, _) => {
                let total = self.nodes[a].value.cols();
                out.push((a, self.pad(g, start, total)?));
            }
            Op::Pad(a, start, _) => {
                let w = self.nodes[a].value.cols();
                out.push((a, self.slice(g, start, start + w)?));
            }
        }
        Ok(out)
    }
}
