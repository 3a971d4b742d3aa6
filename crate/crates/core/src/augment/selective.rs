use std::collections::BTreeSet;

use super::{uniform_mix, AugmentError, AugmentationPlan, Augmented, Provenance};
use crate::clf::Classifier;
use crate::dataio::LabeledDataset;
use crate::genmod::{sample, GenerativeModel};
use crate::rng::RngStream;
use crate::Scalar;

/// Selective strategy. Each round draws a candidate batch, trains a
/// classifier on the real rows plus everything accepted so far, and keeps
/// candidates whose top confidence is strictly above the threshold, labelled
/// with the predicted class. The generator is trained once unless the plan
/// asks for a retrain every round; `train_generator` gets the round index.
pub fn augment_selective<T, G, C>(real: &LabeledDataset, plan: &AugmentationPlan, seed: u64, mut train_generator: G, mut train_classifier: C) -> Result<Augmented, AugmentError>
where
    T: Scalar,
    G: FnMut(&LabeledDataset, usize) -> Result<GenerativeModel<T>, AugmentError>,
    C: FnMut(&LabeledDataset) -> Result<Classifier, AugmentError>,
{
    if !plan.method.is_selective() {
        return Err(AugmentError::Config(format!("{} is not a selective method", plan.method)));
    }
    plan.validate()?;
    let labels = real.require_labels()?;
    let n = plan.n_append;
    let mut accepted = Augmented {
        rows: real.empty_like(),
        provenance: Vec::new(),
    };
    if n == 0 {
        return Ok(accepted);
    }
    if real.is_empty() {
        return Err(AugmentError::EmptySource(n));
    }
    let threshold = plan.threshold.expect("validated");
    let max_rounds = plan.max_rounds.expect("validated");
    let batch = plan.candidates_per_round();
    let present: BTreeSet<u32> = labels.iter().copied().collect();
    let root = RngStream::new(seed).split_named("selective");
    let mut generator: Option<GenerativeModel<T>> = None;
    let mut seen = 0usize;
    for round in 0..max_rounds {
        if generator.is_none() || plan.retrain_each_round {
            generator = Some(train_generator(real, round)?);
        }
        let g = generator.as_ref().expect("trained above");
        let mut rng = root.split(round as u64);
        let cand = if g.is_conditional() {
            let mix = uniform_mix(batch, g.arch.n_classes);
            let lb: Vec<u32> = mix.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c as u32, m)).collect();
            sample(g, batch, Some(&lb), &mut rng)?
        } else {
            sample(g, batch, None, &mut rng)?
        };
        let mut pool = real.clone();
        pool.extend(&accepted.rows)?;
        let clf = train_classifier(&pool)?;
        let conf = clf.confidence(&cand)?;
        for (r, p) in conf.iter().enumerate() {
            seen += 1;
            let (label, best) = p.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (c, &v)| if v > acc.1 { (c, v) } else { acc });
            let label = label as u32;
            if best > threshold && present.contains(&label) {
                accepted.rows.push(cand.row(r), Some(label))?;
                accepted.provenance.push(Provenance {
                    index: accepted.provenance.len(),
                    method: plan.method,
                    round: Some(round),
                    source_row: None,
                    label,
                    confidence: Some(best),
                    seed,
                });
                if accepted.len() == n {
                    return Ok(accepted);
                }
            }
        }
        log::debug!("selective round {round}: {} of {n} accepted", accepted.len());
    }
    Err(AugmentError::RoundsExhausted {
        accepted: accepted.len(),
        requested: n,
        rounds: max_rounds,
        rate: accepted.len() as f64 / seen.max(1) as f64,
    })
}
