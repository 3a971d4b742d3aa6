use super::EvalError;
use crate::rng::RngStream;

/// A partition of `0..n` into `k` test folds.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every index outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self.folds.iter().enumerate().filter(|(f, _)| *f != fold).flat_map(|(_, v)| v.iter().copied()).collect();
        idx.sort_unstable();
        idx
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.folds.iter().map(Vec::len).collect()
    }
}

/// Random `k`-fold partition, stratified by label when every class has at
/// least `k` rows. Rows are dealt round-robin, so the first `n mod k` folds
/// hold one extra row.
pub fn make_folds(labels: &[u32], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    let n = labels.len();
    if k < 2 {
        return Err(EvalError::Config(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(EvalError::Config(format!("{n} rows cannot fill {k} folds")));
    }
    let mut rng = RngStream::new(seed).split_named("folds");
    let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let stratified = by_class.iter().all(|c| c.is_empty() || c.len() >= k);
    let order: Vec<usize> = if stratified {
        by_class
            .into_iter()
            .flat_map(|mut c| {
                rng.shuffle(&mut c);
                c
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {k} rows; folds are not stratified");
        rng.permutation(n)
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, folds, seed, stratified })
}
