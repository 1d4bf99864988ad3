use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::quantum::seeded_rng;

/// Indices into the labeled collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split. Each label's items are shuffled and dealt
/// round-robin into folds; the dealing position carries over from one label
/// to the next so fold sizes differ by at most one.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Input(format!("k-fold split needs k >= 2, got {k}")));
    }
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    if let Some((label, items)) = by_label.iter().find(|(_, v)| v.len() < k) {
        return Err(Error::Input(format!(
            "label {label} has {} examples, fewer than k = {k}",
            items.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut tests: Vec<Vec<usize>> = (0..k).map(|_| Vec::new()).collect();
    let mut slot = 0;
    for items in by_label.values_mut() {
        items.shuffle(&mut rng);
        for &i in items.iter() {
            tests[slot].push(i);
            slot = (slot + 1) % k;
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn ten_items_five_folds() {
        let labels = vec![0; 10];
        let folds = kfold_split(&labels, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
        assert!(folds.iter().all(|f| f.test.len() == 2 && f.train.len() == 8));
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_examples() {
        assert!(kfold_split(&[0, 0, 1], 2, 0).is_err());
        assert!(kfold_split(&[0, 0], 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn stratified_disjoint_exhaustive(counts in proptest::collection::vec(5usize..40, 1..4), k in 2usize..6, seed in 0u64..100) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(l, &c)| core::iter::repeat_n(l, c)).collect();
            let folds = kfold_split(&labels, k, seed).unwrap();
            prop_assert_eq!(&folds, &kfold_split(&labels, k, seed).unwrap());
            let mut seen = vec![0usize; labels.len()];
            for f in &folds {
                for &i in &f.test {
                    seen[i] += 1;
                }
                prop_assert_eq!(f.train.len() + f.test.len(), labels.len());
                for (l, &c) in counts.iter().enumerate() {
                    let in_fold = f.test.iter().filter(|&&i| labels[i] == l).count() as f64;
                    let expected = c as f64 / k as f64;
                    prop_assert!((in_fold - expected).abs() <= 1.0);
                }
            }
            prop_assert!(seen.iter().all(|&x| x == 1));
        }
    }
}
