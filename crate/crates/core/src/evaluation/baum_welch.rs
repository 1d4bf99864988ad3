use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::models::{check_symbols, Hmm};
use crate::quantum::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iterations: usize,
    /// Stop once the total log-likelihood improves by less than this.
    pub tolerance: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaumWelchResult {
    pub model: Hmm,
    pub best_restart: usize,
    /// Final training log-likelihood of every restart.
    pub restart_log_likelihoods: Vec<f64>,
    /// Per-iteration training log-likelihood of every restart.
    pub traces: Vec<Vec<f64>>,
}

/// Sufficient statistics accumulated over all sequences in one E-step.
struct Expectations {
    log_likelihood: f64,
    initial: DVector<f64>,
    transitions: DMatrix<f64>,
    /// Expected visits to each state as a transition source.
    source_visits: DVector<f64>,
    emissions: DMatrix<f64>,
    /// Expected visits to each state at emitting steps.
    emit_visits: DVector<f64>,
}

/// Scaled forward-backward under the transition-then-emit convention; the
/// initial vector is the state before the first transition.
fn expectations(h: &Hmm, data: &[Vec<usize>]) -> Result<Expectations> {
    let n = h.states();
    let s = h.outputs();
    let a = h.transition();
    let c = h.emission();
    let mut e = Expectations {
        log_likelihood: 0.0,
        initial: DVector::zeros(n),
        transitions: DMatrix::zeros(n, n),
        source_visits: DVector::zeros(n),
        emissions: DMatrix::zeros(s, n),
        emit_visits: DVector::zeros(n),
    };
    for (k, seq) in data.iter().enumerate() {
        let t_len = seq.len();
        let mut alpha = Vec::with_capacity(t_len + 1);
        let mut scale = Vec::with_capacity(t_len);
        alpha.push(h.initial().clone());
        for (t, &y) in seq.iter().enumerate() {
            let mut next = a * &alpha[t];
            for i in 0..n {
                next[i] *= c[(y, i)];
            }
            let ct = next.sum();
            if !(ct > 1e-300) {
                return Err(Error::ZeroProbability { position: t, symbol: y }.in_sequence(k));
            }
            next /= ct;
            scale.push(ct);
            alpha.push(next);
        }
        e.log_likelihood += scale.iter().map(|&x| libm::log(x)).sum::<f64>();
        let mut beta = DVector::from_element(n, 1.0);
        for t in (1..=t_len).rev() {
            let y = seq[t - 1];
            let gamma_t = alpha[t].component_mul(&beta);
            for i in 0..n {
                e.emissions[(y, i)] += gamma_t[i];
                e.emit_visits[i] += gamma_t[i];
            }
            // w_i = C[y,i] β_t(i) / c_t
            let mut wvec = beta.clone();
            for i in 0..n {
                wvec[i] *= c[(y, i)] / scale[t - 1];
            }
            for j in 0..n {
                for i in 0..n {
                    e.transitions[(i, j)] += alpha[t - 1][j] * a[(i, j)] * wvec[i];
                }
            }
            beta = a.transpose() * wvec;
            let gamma_prev = alpha[t - 1].component_mul(&beta);
            e.source_visits += gamma_prev;
        }
        e.initial += alpha[0].component_mul(&beta);
    }
    Ok(e)
}

fn normalize_columns(m: &DMatrix<f64>, totals: &DVector<f64>, fallback: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = fallback.clone();
    for j in 0..m.ncols() {
        if totals[j] > 0.0 {
            let col = m.column(j) / totals[j];
            let sum = col.sum();
            out.set_column(j, &(col / sum));
        }
    }
    out
}

fn maximize(h: &Hmm, e: &Expectations, sequences: usize) -> Result<Hmm> {
    let a = normalize_columns(&e.transitions, &e.source_visits, h.transition());
    let c = normalize_columns(&e.emissions, &e.emit_visits, h.emission());
    let mut x0 = &e.initial / sequences as f64;
    x0 /= x0.sum();
    Hmm::new(a, c, x0)
}

/// Runs EM from one initialization; returns the model whose likelihood was
/// evaluated last together with the likelihood trace.
pub fn em_from(initial: Hmm, data: &[Vec<usize>], options: EmOptions) -> Result<(Hmm, Vec<f64>)> {
    let mut h = initial;
    let mut trace = Vec::new();
    for iteration in 0..options.max_iterations.max(1) {
        let e = expectations(&h, data)?;
        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| e.log_likelihood - prev < options.tolerance);
        trace.push(e.log_likelihood);
        if converged || iteration + 1 == options.max_iterations.max(1) {
            break;
        }
        h = maximize(&h, &e, data.len())?;
    }
    Ok((h, trace))
}

/// Baum–Welch with random Dirichlet(1) restarts; keeps the restart with the
/// highest training log-likelihood.
pub fn baum_welch(data: &[Vec<usize>], n: usize, s: usize, restarts: usize, seed: u64) -> Result<BaumWelchResult> {
    baum_welch_with(data, n, s, restarts, seed, EmOptions::default())
}

pub fn baum_welch_with(
    data: &[Vec<usize>],
    n: usize,
    s: usize,
    restarts: usize,
    seed: u64,
    options: EmOptions,
) -> Result<BaumWelchResult> {
    if restarts == 0 {
        return Err(Error::Config("at least one restart is required".into()));
    }
    if n == 0 || s == 0 {
        return Err(Error::Config("HMM needs at least one state and one symbol".into()));
    }
    if data.iter().all(|seq| seq.is_empty()) {
        return Err(Error::Input("no training symbols".into()));
    }
    for (i, seq) in data.iter().enumerate() {
        check_symbols(seq, s).map_err(|e| e.in_sequence(i))?;
    }
    let mut rng = seeded_rng(seed);
    let mut best: Option<(usize, Hmm)> = None;
    let mut restart_log_likelihoods = Vec::with_capacity(restarts);
    let mut traces = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let init = Hmm::random(n, s, rng.next_u64())?;
        let (model, trace) = em_from(init, data, options)?;
        let ll = *trace.last().expect("at least one iteration");
        let better = best.as_ref().is_none_or(|(b, _)| ll > restart_log_likelihoods[*b]);
        restart_log_likelihoods.push(ll);
        traces.push(trace);
        if better {
            best = Some((r, model));
        }
    }
    let (best_restart, model) = best.expect("at least one restart");
    Ok(BaumWelchResult {
        model,
        best_restart,
        restart_log_likelihoods,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::description_accuracy;
    use crate::models::{sample_sequence, sequence_log_prob};
    use alloc::vec;

    #[test]
    fn single_state_recovers_frequencies_in_one_iteration() {
        let data = vec![vec![0, 1, 1, 2], vec![1, 1, 0]];
        let init = Hmm::random(1, 3, 3).unwrap();
        let opts = EmOptions {
            max_iterations: 2,
            tolerance: 0.0,
        };
        let (h, _) = em_from(init, &data, opts).unwrap();
        let expected = [2.0 / 7.0, 4.0 / 7.0, 1.0 / 7.0];
        for (y, e) in expected.iter().enumerate() {
            assert!((h.emission()[(y, 0)] - e).abs() < 1e-15);
        }
    }

    #[test]
    fn log_likelihood_is_monotone_and_matches_filter() {
        let gen = Hmm::random(3, 4, 8).unwrap();
        let data: Vec<Vec<usize>> = (0..5).map(|i| sample_sequence(&gen, 80, None, i).unwrap()).collect();
        let r = baum_welch(&data, 3, 4, 3, 1).unwrap();
        for trace in &r.traces {
            for w in trace.windows(2) {
                assert!(w[1] - w[0] >= -1e-10, "{w:?}");
            }
        }
        let direct: f64 = data.iter().map(|s| sequence_log_prob(&r.model, s, 0).unwrap()).sum();
        assert!((direct - r.restart_log_likelihoods[r.best_restart]).abs() < 1e-8);
        let best = r
            .restart_log_likelihoods
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, r.restart_log_likelihoods[r.best_restart]);
    }

    #[test]
    fn recovers_generator_da() {
        let gen = Hmm::new(
            DMatrix::from_row_slice(3, 3, &[0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8]),
            DMatrix::from_row_slice(3, 3, &[0.7, 0.2, 0.1, 0.2, 0.7, 0.1, 0.1, 0.1, 0.8]),
            DVector::from_element(3, 1.0 / 3.0),
        )
        .unwrap();
        let train: Vec<Vec<usize>> = (0..10).map(|i| sample_sequence(&gen, 500, None, i).unwrap()).collect();
        let test: Vec<Vec<usize>> = (100..110)
            .map(|i| sample_sequence(&gen, 500, None, i).unwrap())
            .collect();
        let r = baum_welch(&train, 3, 3, 5, 7).unwrap();
        let learned = description_accuracy(&r.model, &test, 50).unwrap().mean;
        let truth = description_accuracy(&gen, &test, 50).unwrap().mean;
        assert!((learned - truth).abs() < 0.05, "{learned} vs {truth}");
    }

    #[test]
    fn input_errors() {
        assert!(matches!(baum_welch(&[], 2, 2, 1, 0), Err(Error::Input(_))));
        assert!(matches!(baum_welch(&[vec![0]], 2, 2, 0, 0), Err(Error::Config(_))));
        assert!(baum_welch(&[vec![0, 5]], 2, 2, 1, 0).is_err());
    }
}
