//! Stratified K-fold splitting: items are shuffled once per class by the
//! seed, each class is cut into K contiguous runs, and fold f tests on the
//! union of run f across classes. Every item lands in exactly one test
//! fold and per-fold class balance holds within one item.

use rand::Rng;

use crate::error::{Error, Result};
use crate::iq::Label;
use crate::linksim::rng_stream;

pub fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::Parameter(format!("k must be at least 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Data(format!(
            "need at least k={k} items for k-fold, got {}",
            labels.len()
        )));
    }

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class_id, class) in [Label::NoJam, Label::Jam].into_iter().enumerate() {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let mut rng = rng_stream(seed, 0xf01d + class_id as u64);
        for i in (1..idx.len()).rev() {
            let swap = rng.gen_range(0..=i);
            idx.swap(i, swap);
        }
        // contiguous runs whose sizes differ by at most one
        let base = idx.len() / k;
        let extra = idx.len() % k;
        let mut cursor = 0;
        for (f, fold) in folds.iter_mut().enumerate() {
            let take = base + usize::from(f < extra);
            fold.extend(&idx[cursor..cursor + take]);
            cursor += take;
        }
    }

    Ok(folds
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
            let train: Vec<usize> = (0..labels.len()).filter(|i| !in_test.contains(i)).collect();
            (train, test)
        })
        .collect())
}
