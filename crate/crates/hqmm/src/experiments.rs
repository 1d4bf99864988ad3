//! Per-label likelihood classification under stratified cross-validation.

use hqmm_core::evaluation::{baum_welch, evaluate_fold, kfold_split, ClassificationResult, FoldOutcome};
use hqmm_core::learning::{train, TrainingConfig};
use hqmm_core::models::{LikelihoodModel, ModelSpec};
use serde::Serialize;

use crate::dataset::SequenceDataset;
use crate::error::{Error, Result};

/// How each per-label model is fit.
#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Hqmm {
        arch: (usize, usize, usize),
        config: TrainingConfig,
    },
    /// Baum–Welch with random restarts.
    Hmm { states: usize, restarts: usize, seed: u64 },
}

impl Learner {
    fn seed(&self) -> u64 {
        match self {
            Learner::Hqmm { config, .. } => config.seed,
            Learner::Hmm { seed, .. } => *seed,
        }
    }

    fn burn_in(&self) -> usize {
        match self {
            Learner::Hqmm { config, .. } => config.burn_in,
            Learner::Hmm { .. } => 0,
        }
    }

    fn fit(&self, data: &[Vec<usize>], alphabet: usize, seed: u64) -> Result<ModelSpec> {
        match self {
            Learner::Hqmm { arch, config } => {
                let cfg = TrainingConfig { seed, ..config.clone() };
                Ok(ModelSpec::KHqmm(train(data, *arch, &cfg, &[])?.best))
            }
            Learner::Hmm { states, restarts, .. } => Ok(ModelSpec::Hmm(
                baum_welch(data, *states, alphabet, *restarts, seed)?.model,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
    /// `confusion[true][predicted]`; the last column counts unclassifiable
    /// sequences.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub folds: usize,
    pub labels: Vec<String>,
    pub label_counts: Vec<(String, usize)>,
    pub fold_reports: Vec<FoldReport>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    pub split_seed: u64,
}

/// Independent seed for the model of `label` in `fold`.
pub fn job_seed(base: u64, fold: usize, label: usize, labels: usize) -> u64 {
    base ^ ((fold * labels + label + 1) as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Trains one model per label on each training fold and classifies the
/// held-out fold by maximum likelihood. Jobs run concurrently when the
/// `parallel` feature is on.
pub fn cross_validate(ds: &SequenceDataset, k: usize, learner: &Learner) -> Result<CrossValidation> {
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| Error::Usage("classification needs a labeled dataset".into()))?;
    let num_labels = ds.label_names.len();
    if num_labels < 2 {
        return Err(Error::Usage("classification needs at least two labels".into()));
    }
    let split_seed = learner.seed();
    let folds = kfold_split(labels, k, split_seed)?;
    let jobs: Vec<(usize, usize)> = (0..k).flat_map(|f| (0..num_labels).map(move |l| (f, l))).collect();
    let run_job = |&(f, l): &(usize, usize)| -> Result<ModelSpec> {
        let data: Vec<Vec<usize>> = folds[f]
            .train
            .iter()
            .filter(|&&i| labels[i] == l)
            .map(|&i| ds.sequences[i].clone())
            .collect();
        log::info!(
            "fold {f}, label {}: training on {} sequences",
            ds.label_names[l],
            data.len()
        );
        learner.fit(&data, ds.alphabet, job_seed(split_seed, f, l, num_labels))
    };
    #[cfg(feature = "parallel")]
    let models: Vec<Result<ModelSpec>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run_job).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let models: Vec<Result<ModelSpec>> = jobs.iter().map(run_job).collect();
    let models = models.into_iter().collect::<Result<Vec<_>>>()?;

    let mut outcomes: Vec<FoldOutcome> = Vec::with_capacity(k);
    let mut fold_reports = Vec::with_capacity(k);
    for (f, fold) in folds.iter().enumerate() {
        let per_label: Vec<&dyn LikelihoodModel> = models[f * num_labels..(f + 1) * num_labels]
            .iter()
            .map(|m| m.as_likelihood())
            .collect();
        let test: Vec<(usize, Vec<usize>)> = fold
            .test
            .iter()
            .map(|&i| (labels[i], ds.sequences[i].clone()))
            .collect();
        let outcome = evaluate_fold(&per_label, &test, learner.burn_in())?;
        fold_reports.push(FoldReport {
            fold: f,
            train_size: fold.train.len(),
            test_size: fold.test.len(),
            accuracy: outcome.accuracy,
            confusion: outcome.confusion.clone(),
        });
        outcomes.push(outcome);
    }
    let summary = ClassificationResult::from_folds(&outcomes);
    Ok(CrossValidation {
        folds: k,
        labels: ds.label_names.clone(),
        label_counts: ds.label_counts(),
        fold_reports,
        fold_accuracies: summary.fold_accuracies,
        mean_accuracy: summary.mean_accuracy,
        confusion: summary.confusion,
        split_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use hqmm_core::models::{sample_sequence, Hmm};
    use nalgebra::{DMatrix, DVector};

    fn biased(p: f64) -> Hmm {
        Hmm::new(
            DMatrix::identity(1, 1),
            DMatrix::from_column_slice(2, 1, &[p, 1.0 - p]),
            DVector::from_element(1, 1.0),
        )
        .unwrap()
    }

    fn two_label_dataset() -> SequenceDataset {
        let mut sequences = Vec::new();
        let mut labels = Vec::new();
        for (l, p) in [0.85, 0.15].iter().enumerate() {
            for i in 0..20 {
                sequences.push(sample_sequence(&biased(*p), 30, None, (l * 100 + i) as u64).unwrap());
                labels.push(l);
            }
        }
        SequenceDataset {
            alphabet: 2,
            sequences,
            labels: Some(labels),
            label_names: vec!["a".into(), "b".into()],
            burn_in: 0,
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn separable_labels_are_classified() {
        let ds = two_label_dataset();
        let learner = Learner::Hqmm {
            arch: (1, 2, 1),
            config: TrainingConfig {
                epochs: 15,
                batch_size: 5,
                burn_in: 0,
                ..TrainingConfig::splice()
            },
        };
        let cv = cross_validate(&ds, 2, &learner).unwrap();
        assert!(cv.mean_accuracy > 0.95, "{cv:?}");
        let total: usize = cv.confusion.iter().flatten().sum();
        assert_eq!(total, ds.len());
        let hmm = cross_validate(
            &ds,
            2,
            &Learner::Hmm {
                states: 1,
                restarts: 1,
                seed: 0,
            },
        )
        .unwrap();
        assert!(hmm.mean_accuracy > 0.95);
    }

    #[test]
    fn unlabeled_data_is_rejected() {
        let mut ds = two_label_dataset();
        ds.labels = None;
        assert!(cross_validate(
            &ds,
            2,
            &Learner::Hmm {
                states: 1,
                restarts: 1,
                seed: 0
            }
        )
        .is_err());
    }
}
