use nalgebra::{DMatrix, DVector};

use super::{AugmentError, Augmented, Method, Montage, Provenance, RdaAngle};
use crate::dataio::{LabeledDataset, Normalizer};
use crate::rng::RngStream;

fn source_rows(real: &LabeledDataset, n: usize, rng: &mut RngStream) -> Result<Vec<usize>, AugmentError> {
    if n > 0 && real.is_empty() {
        return Err(AugmentError::EmptySource(n));
    }
    Ok((0..n).map(|_| rng.below(real.rows())).collect())
}

fn provenance(method: Method, sources: &[usize], labels: &[u32], seed: u64) -> Vec<Provenance> {
    sources
        .iter()
        .enumerate()
        .map(|(index, &s)| Provenance {
            index,
            method,
            round: None,
            source_row: Some(s),
            label: labels[s],
            confidence: None,
            seed,
        })
        .collect()
}

/// Resamples real rows with replacement and adds `N(0, σ²)` noise per
/// dimension in the z-scored space of `real`.
pub fn gaussian_augment(real: &LabeledDataset, sigma: f64, n: usize, seed: u64) -> Result<Augmented, AugmentError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(AugmentError::Config(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let labels = real.require_labels()?;
    let mut rng = RngStream::new(seed).split_named("gau");
    let sources = source_rows(real, n, &mut rng)?;
    let norm = Normalizer::fit(real.features());
    let scale: Vec<f64> = norm.std().iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect();
    let mut rows = real.empty_like();
    let mut buf = vec![0.0; real.dims()];
    for &s in &sources {
        for ((b, &x), &sd) in buf.iter_mut().zip(real.row(s)).zip(&scale) {
            *b = x + sigma * sd * rng.normal();
        }
        rows.push(&buf, Some(labels[s]))?;
    }
    Ok(Augmented {
        provenance: provenance(Method::Gau, &sources, labels, seed),
        rows,
    })
}

/// Rotation about the vertical axis by `deg` degrees.
pub fn rotate_z(p: [f64; 3], deg: f64) -> [f64; 3] {
    let (s, c) = deg.to_radians().sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Gaussian RBF interpolant with a constant term over fixed nodes:
/// `f(p) = Σ_j c_j exp(−(‖p − x_j‖ / ε)²) + d` with `Σ c_j = 0`, where `ε` is
/// the median nearest-neighbour distance between nodes.
#[derive(Clone, Debug)]
pub struct RbfInterpolator {
    nodes: Vec<[f64; 3]>,
    width: f64,
    /// First `n` columns of the inverse of the augmented system.
    solve: DMatrix<f64>,
}

impl RbfInterpolator {
    pub fn new(nodes: &[[f64; 3]]) -> Result<Self, AugmentError> {
        let n = nodes.len();
        if n < 2 {
            return Err(AugmentError::Montage("interpolation needs at least two electrodes".into()));
        }
        let mut nearest: Vec<f64> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| dist(&nodes[i], &nodes[j])).fold(f64::INFINITY, f64::min))
            .collect();
        nearest.sort_by(f64::total_cmp);
        let width = nearest[n / 2];
        if width.is_nan() || width <= 0.0 {
            return Err(AugmentError::Montage("electrode positions coincide".into()));
        }
        let system = |ridge: f64| {
            DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
                (true, true) => (-(dist(&nodes[i], &nodes[j]) / width).powi(2)).exp() + if i == j { ridge } else { 0.0 },
                (false, false) => 0.0,
                _ => 1.0,
            })
        };
        let inv = system(0.0)
            .try_inverse()
            .or_else(|| system(1e-8).try_inverse())
            .ok_or_else(|| AugmentError::Montage("interpolation system is singular".into()))?;
        Ok(Self {
            nodes: nodes.to_vec(),
            width,
            solve: inv.columns(0, n).into_owned(),
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Matrix `E` with `f(targets) = E · f(nodes)`.
    pub fn evaluation_matrix(&self, targets: &[[f64; 3]]) -> DMatrix<f64> {
        let n = self.nodes.len();
        let basis = DMatrix::from_fn(targets.len(), n + 1, |i, j| {
            if j < n {
                (-(dist(&targets[i], &self.nodes[j]) / self.width).powi(2)).exp()
            } else {
                1.0
            }
        });
        basis * &self.solve
    }

    pub fn rotation(&self, deg: f64) -> DMatrix<f64> {
        let rotated: Vec<[f64; 3]> = self.nodes.iter().map(|&p| rotate_z(p, deg)).collect();
        self.evaluation_matrix(&rotated)
    }
}

/// Rotational augmentation: each resampled row is re-read at electrode
/// positions rotated about z, band by band.
pub fn rda_augment(real: &LabeledDataset, montage: &Montage, angle: RdaAngle, n: usize, seed: u64) -> Result<Augmented, AugmentError> {
    let channels = real.features().n_channels();
    if montage.len() != channels {
        return Err(AugmentError::MontageMismatch { montage: montage.len(), channels });
    }
    match angle {
        RdaAngle::Fixed(a) if (-180.0..=180.0).contains(&a) => {}
        RdaAngle::Uniform { low, high } if -180.0 <= low && low <= high && high <= 180.0 => {}
        other => return Err(AugmentError::Config(format!("rotation {other:?} is outside [-180, 180] degrees"))),
    }
    let labels = real.require_labels()?;
    let mut rng = RngStream::new(seed).split_named("rda");
    let sources = source_rows(real, n, &mut rng)?;
    let rbf = RbfInterpolator::new(montage.coords())?;
    let fixed = match angle {
        RdaAngle::Fixed(a) => Some(rbf.rotation(a)),
        RdaAngle::Uniform { .. } => None,
    };
    let bands = real.features().n_bands();
    let mut rows = real.empty_like();
    let mut out = vec![0.0; real.dims()];
    for &s in &sources {
        let drawn;
        let e = match (&fixed, angle) {
            (Some(e), _) => e,
            (None, RdaAngle::Uniform { low, high }) => {
                drawn = rbf.rotation(low + (high - low) * rng.uniform());
                &drawn
            }
            (None, RdaAngle::Fixed(_)) => unreachable!(),
        };
        let src = real.row(s);
        for b in 0..bands {
            let v = DVector::from_fn(channels, |c, _| src[c * bands + b]);
            let r = e * v;
            for c in 0..channels {
                out[c * bands + b] = r[c];
            }
        }
        rows.push(&out, Some(labels[s]))?;
    }
    Ok(Augmented {
        provenance: provenance(Method::Rda, &sources, labels, seed),
        rows,
    })
}
