use super::{AugmentError, Augmented, Method, Provenance};
use crate::dataio::LabeledDataset;
use crate::genmod::{sample, GenerativeModel, ModelKind};
use crate::rng::RngStream;
use crate::Scalar;

/// `n` split evenly over `n_classes`; the remainder goes to the lowest ids.
pub fn uniform_mix(n: usize, n_classes: usize) -> Vec<usize> {
    if n_classes == 0 {
        return Vec::new();
    }
    (0..n_classes).map(|c| n / n_classes + usize::from(c < n % n_classes)).collect()
}

/// Draws `mix[c]` rows labelled `c` from a conditional generator and keeps
/// them all. `mix` defaults to [`uniform_mix`].
pub fn augment_full<T: Scalar>(model: &GenerativeModel<T>, mix: Option<&[usize]>, n: usize, seed: u64) -> Result<Augmented, AugmentError> {
    if !model.is_conditional() {
        return Err(AugmentError::Unconditional);
    }
    let k = model.arch.n_classes;
    let mix = match mix {
        Some(m) => m.to_vec(),
        None => uniform_mix(n, k),
    };
    if mix.len() != k || mix.iter().sum::<usize>() != n {
        return Err(AugmentError::Config(format!("class mix {mix:?} must have {k} entries summing to {n}")));
    }
    let labels: Vec<u32> = mix.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c as u32, m)).collect();
    let mut rng = RngStream::new(seed).split_named("full");
    let rows = sample(model, n, Some(&labels), &mut rng)?;
    let method = match model.kind() {
        ModelKind::Cvae => Method::Cvae,
        _ => Method::Cwgan,
    };
    let provenance = labels
        .iter()
        .enumerate()
        .map(|(index, &label)| Provenance {
            index,
            method,
            round: None,
            source_row: None,
            label,
            confidence: None,
            seed,
        })
        .collect();
    Ok(Augmented {
        rows: LabeledDataset::new(rows, labels, k as u32)?,
        provenance,
    })
}
