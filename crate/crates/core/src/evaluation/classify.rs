use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::LikelihoodModel;

/// Argmax over per-label log-likelihoods; `None` marks a label whose model
/// assigns zero probability. Ties go to the lowest label.
pub fn argmax_label(log_likelihoods: &[Option<f64>]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut tied = false;
    for (label, ll) in log_likelihoods.iter().enumerate() {
        let Some(ll) = *ll else { continue };
        match best {
            Some((_, b)) if ll > b => {
                best = Some((label, ll));
                tied = false;
            }
            Some((_, b)) if ll == b => tied = true,
            Some(_) => {}
            None => best = Some((label, ll)),
        }
    }
    let (label, _) = best.ok_or(Error::Unclassifiable)?;
    if tied {
        log::debug!("likelihood tie broken in favor of label {label}");
    }
    Ok(label)
}

/// Label of the model that assigns `seq` the highest likelihood.
pub fn classify(models: &[&dyn LikelihoodModel], seq: &[usize], burn_in: usize) -> Result<usize> {
    if models.len() < 2 {
        return Err(Error::Input("classification needs at least two labels".into()));
    }
    let s = models[0].alphabet_size();
    if models.iter().any(|m| m.alphabet_size() != s) {
        return Err(Error::Input("per-label models must share an alphabet".into()));
    }
    let scores = models
        .iter()
        .map(|m| match m.log_likelihood(seq, burn_in) {
            Ok(ll) => Ok(Some(ll)),
            Err(e) if e.is_zero_probability() => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    argmax_label(&scores)
}

/// Accuracy and confusion counts of one test fold. `confusion[true][pred]`;
/// the extra last column counts unclassifiable sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate_fold(
    models: &[&dyn LikelihoodModel],
    test: &[(usize, Vec<usize>)],
    burn_in: usize,
) -> Result<FoldOutcome> {
    let labels = models.len();
    let mut confusion = vec![vec![0usize; labels + 1]; labels];
    let mut correct = 0usize;
    for (i, (label, seq)) in test.iter().enumerate() {
        if *label >= labels {
            return Err(Error::Input(alloc::format!("label {label} has no model")));
        }
        let predicted = match classify(models, seq, burn_in) {
            Ok(p) => p,
            Err(Error::Unclassifiable) => labels,
            Err(e) => return Err(e.in_sequence(i)),
        };
        confusion[*label][predicted] += 1;
        if predicted == *label {
            correct += 1;
        }
    }
    let accuracy = if test.is_empty() {
        0.0
    } else {
        correct as f64 / test.len() as f64
    };
    Ok(FoldOutcome { accuracy, confusion })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Summed over folds; same layout as [`FoldOutcome::confusion`].
    pub confusion: Vec<Vec<usize>>,
}

impl ClassificationResult {
    pub fn from_folds(folds: &[FoldOutcome]) -> Self {
        let labels = folds.first().map_or(0, |f| f.confusion.len());
        let mut confusion = vec![vec![0usize; labels + 1]; labels];
        for f in folds {
            for (row, frow) in confusion.iter_mut().zip(&f.confusion) {
                for (c, x) in row.iter_mut().zip(frow) {
                    *c += x;
                }
            }
        }
        let fold_accuracies: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
        let mean_accuracy = if folds.is_empty() {
            0.0
        } else {
            fold_accuracies.iter().sum::<f64>() / folds.len() as f64
        };
        Self {
            fold_accuracies,
            mean_accuracy,
            confusion,
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}
