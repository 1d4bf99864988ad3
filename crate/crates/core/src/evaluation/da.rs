use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::LikelihoodModel;

/// Squashing function: `tanh(x/8)` below zero, identity above.
pub fn squash(x: f64) -> f64 {
    if x <= 0.0 {
        libm::tanh(x / 8.0)
    } else {
        x
    }
}

/// Description accuracy of one log-likelihood over `effective_length`
/// symbols from an alphabet of size `s`.
pub fn da_from_log_likelihood(log_p: f64, effective_length: usize, s: usize) -> f64 {
    squash(1.0 + log_p / (libm::log(s as f64) * effective_length as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaScore {
    pub mean: f64,
    /// Population standard deviation across sequences.
    pub std: f64,
    /// Mean post-burn-in length.
    pub effective_length: f64,
    pub alphabet: usize,
    pub scores: Vec<f64>,
    /// Sequences the model declared impossible; each scored −1.
    pub zero_probability: usize,
}

/// Mean and spread of the per-sequence DA. Impossible sequences are scored
/// at the −1 limit and counted in `zero_probability`.
pub fn description_accuracy<M: LikelihoodModel + ?Sized>(
    model: &M,
    sequences: &[Vec<usize>],
    burn_in: usize,
) -> Result<DaScore> {
    let s = model.alphabet_size();
    if s < 2 {
        return Err(Error::Input(format!(
            "description accuracy needs an alphabet of at least 2, got {s}"
        )));
    }
    if sequences.is_empty() {
        return Err(Error::Input("no sequences to score".into()));
    }
    let mut scores = Vec::with_capacity(sequences.len());
    let mut zero_probability = 0;
    let mut total_length = 0usize;
    for (i, seq) in sequences.iter().enumerate() {
        if burn_in >= seq.len() {
            return Err(Error::Input(format!(
                "sequence {i} has length {} but burn-in is {burn_in}",
                seq.len()
            )));
        }
        let ell = seq.len() - burn_in;
        total_length += ell;
        match model.log_likelihood(seq, burn_in) {
            Ok(lp) => scores.push(da_from_log_likelihood(lp, ell, s)),
            Err(e) if e.is_zero_probability() => {
                zero_probability += 1;
                scores.push(-1.0);
            }
            Err(e) => return Err(e.in_sequence(i)),
        }
    }
    let m = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / m;
    let var = scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
    Ok(DaScore {
        mean,
        std: libm::sqrt(var),
        effective_length: total_length as f64 / m,
        alphabet: s,
        scores,
        zero_probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sequence_log_prob, Hmm, SequenceModel};
    use alloc::vec;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn unit_behavior() {
        let s = 4;
        let ell = 50;
        let ln_s = (s as f64).ln();
        assert_eq!(da_from_log_likelihood(-(ell as f64) * ln_s, ell, s), 0.0);
        assert_eq!(da_from_log_likelihood(0.0, ell, s), 1.0);
        let x = da_from_log_likelihood(-2.0 * ell as f64 * ln_s, ell, s);
        assert!((x - (-1.0f64 / 8.0).tanh()).abs() < 1e-12);
        assert!((x + 0.12435).abs() < 1e-5);
    }

    #[test]
    fn squash_is_continuous_and_monotone() {
        assert_eq!(squash(0.0), 0.0);
        let grid: Vec<f64> = (-400..=100).map(|i| i as f64 * 0.01).collect();
        for w in grid.windows(2) {
            assert!(squash(w[1]) > squash(w[0]));
        }
        assert!((squash(1e-12) - squash(-1e-12)).abs() < 1e-11);
    }

    #[test]
    fn uniform_model_scores_zero() {
        let u = Hmm::uniform(3, 3);
        let seqs = vec![vec![0, 1, 2, 2, 1], vec![2, 2, 2, 2, 2, 0]];
        let da = description_accuracy(&u, &seqs, 1).unwrap();
        assert!(da.mean.abs() < 1e-10 && da.std < 1e-10);
        assert_eq!(da.alphabet, 3);
    }

    #[test]
    fn impossible_sequences_are_flagged() {
        let h = Hmm::new(
            DMatrix::identity(1, 1),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DVector::from_element(1, 1.),
        )
        .unwrap();
        let da = description_accuracy(&h, &[vec![0, 0, 0], vec![0, 1, 0]], 0).unwrap();
        assert_eq!(da.zero_probability, 1);
        assert_eq!(da.scores, vec![1.0, -1.0]);
        assert_eq!(da.mean, 0.0);
        assert!((da.std - 1.0).abs() < 1e-15);
    }

    #[test]
    fn splitting_with_chained_state_composes() {
        let h = Hmm::random(3, 3, 42).unwrap();
        let seq: Vec<usize> = crate::models::sample_sequence(&h, 60, None, 1).unwrap();
        let whole = sequence_log_prob(&h, &seq, 10).unwrap();
        // Second half scored from the filtered state after the first half.
        let mid = 35;
        let first = sequence_log_prob(&h, &seq[..mid], 10).unwrap();
        let state = crate::models::filter(&h, &seq[..mid]).unwrap();
        let mut x = state;
        let mut second = 0.0;
        for &y in &seq[mid..] {
            let (nx, p) = h.step(&x, y).unwrap();
            second += p.ln();
            x = nx;
        }
        assert!((whole - first - second).abs() < 1e-9);
        let ell = seq.len() - 10;
        let combined = da_from_log_likelihood(first + second, ell, 3);
        assert!((combined - description_accuracy(&h, &[seq], 10).unwrap().mean).abs() < 1e-9);
    }
}
