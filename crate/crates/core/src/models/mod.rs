//! Filtering, sequence probabilities and sampling for every model family.
//!
//! All families share [`SequenceModel`]: a state, a conditioning step that
//! returns the normalizer `P(y | state)`, and the full predictive
//! distribution. Likelihoods are always computed by scaled filtering
//! (renormalize every step, accumulate the log normalizers), so long
//! sequences never underflow.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::{seeded_rng, C64};
use crate::tol::Tolerances;

mod hmm;
mod hqmm;
mod noom;
mod oom;

pub use hmm::Hmm;
pub use hqmm::{KHqmm, LHqmm};
pub use noom::Noom;
pub use oom::{validate_oom_depth, GeneralOom, OomDepthReport, StandardOom};

/// A discrete-output sequential model with a filtering state.
pub trait SequenceModel {
    type State: Clone;

    fn alphabet_size(&self) -> usize;

    fn initial_state(&self) -> Self::State;

    /// Conditions `state` on `symbol`, returning the new state and
    /// `P(symbol | state)`.
    fn step(&self, state: &Self::State, symbol: usize) -> Result<(Self::State, f64)>;

    /// `P(y | state)` for every symbol `y`.
    fn symbol_probabilities(&self, state: &Self::State) -> Result<Vec<f64>>;
}

/// Object-safe view used by metrics and classifiers.
pub trait LikelihoodModel {
    fn alphabet_size(&self) -> usize;

    /// Natural-log likelihood of `seq` after `burn_in` conditioning-only steps.
    fn log_likelihood(&self, seq: &[usize], burn_in: usize) -> Result<f64>;
}

impl<M: SequenceModel> LikelihoodModel for M {
    fn alphabet_size(&self) -> usize {
        SequenceModel::alphabet_size(self)
    }

    fn log_likelihood(&self, seq: &[usize], burn_in: usize) -> Result<f64> {
        sequence_log_prob(self, seq, burn_in)
    }
}

pub(crate) fn check_symbols(seq: &[usize], alphabet: usize) -> Result<()> {
    match seq.iter().find(|&&y| y >= alphabet) {
        Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, alphabet }),
        None => Ok(()),
    }
}

/// Scaled-filtering log probability; burn-in symbols advance the state but
/// contribute no log terms.
pub fn sequence_log_prob<M: SequenceModel + ?Sized>(model: &M, seq: &[usize], burn_in: usize) -> Result<f64> {
    if burn_in >= seq.len() {
        return Err(Error::Input(alloc::format!(
            "burn-in {burn_in} must be shorter than the sequence ({})",
            seq.len()
        )));
    }
    check_symbols(seq, model.alphabet_size())?;
    let mut state = model.initial_state();
    let mut log_p = 0.0;
    for (t, &y) in seq.iter().enumerate() {
        let (next, p) = model.step(&state, y).map_err(|e| e.at_position(t))?;
        if t >= burn_in {
            log_p += libm::log(p);
        }
        state = next;
    }
    Ok(log_p)
}

/// Probability of a whole sequence from the initial state, with impossible
/// sequences mapped to 0.
pub fn sequence_probability<M: SequenceModel + ?Sized>(model: &M, seq: &[usize]) -> Result<f64> {
    if seq.is_empty() {
        return Ok(1.0);
    }
    match sequence_log_prob(model, seq, 0) {
        Ok(lp) => Ok(libm::exp(lp)),
        Err(e) if e.is_zero_probability() => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Runs the filter over `seq` and returns the final state.
pub fn filter<M: SequenceModel + ?Sized>(model: &M, seq: &[usize]) -> Result<M::State> {
    check_symbols(seq, model.alphabet_size())?;
    let mut state = model.initial_state();
    for (t, &y) in seq.iter().enumerate() {
        state = model.step(&state, y).map_err(|e| e.at_position(t))?.0;
    }
    Ok(state)
}

/// Draws a sequence by repeatedly sampling from the predictive distribution
/// and conditioning on the draw.
pub fn sample_sequence<M: SequenceModel + ?Sized>(
    model: &M,
    length: usize,
    initial: Option<M::State>,
    seed: u64,
) -> Result<Vec<usize>> {
    sample_sequence_with(model, length, initial, &mut seeded_rng(seed))
}

pub fn sample_sequence_with<M: SequenceModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    length: usize,
    initial: Option<M::State>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut state = initial.unwrap_or_else(|| model.initial_state());
    let mut out = Vec::with_capacity(length);
    for t in 0..length {
        let probs = model.symbol_probabilities(&state)?;
        let y = draw(&probs, rng);
        state = model.step(&state, y).map_err(|e| e.at_position(t))?.0;
        out.push(y);
    }
    Ok(out)
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (y, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = y;
        if u < acc {
            return y;
        }
    }
    last
}

/// Every sequence of `len` symbols over an alphabet of size `s`, in
/// lexicographic order.
pub fn enumerate_sequences(s: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if s == 0 && len > 0 { 0 } else { s.pow(len as u32) };
    (0..total).map(move |mut code| {
        let mut seq = vec![0; len];
        for slot in seq.iter_mut().rev() {
            *slot = code % s;
            code /= s;
        }
        seq
    })
}

/// Extracts a real probability from a complex normalizer.
pub(crate) fn real_probability(z: C64, symbol: usize, tol: &Tolerances) -> Result<f64> {
    if z.im.abs() > tol.imaginary {
        return Err(Error::Validity(alloc::format!(
            "probability of symbol {symbol} has imaginary part {:e}",
            z.im
        )));
    }
    nonnegative_probability(z.re, symbol, tol)
}

pub(crate) fn nonnegative_probability(p: f64, symbol: usize, tol: &Tolerances) -> Result<f64> {
    if p < -tol.negative_probability {
        return Err(Error::NegativeProbability {
            position: 0,
            symbol,
            probability: p,
        });
    }
    Ok(p)
}

pub(crate) fn check_normalizer(p: f64, symbol: usize, tol: &Tolerances) -> Result<()> {
    if !(p >= tol.underflow) {
        return Err(Error::ZeroProbability { position: 0, symbol });
    }
    Ok(())
}

/// Tagged union over every supported model family.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Hmm(Hmm),
    StandardOom(StandardOom),
    GeneralOom(GeneralOom),
    Noom(Noom),
    KHqmm(KHqmm),
    LHqmm(LHqmm),
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Hmm(_) => "hmm",
            ModelSpec::StandardOom(_) => "standard_oom",
            ModelSpec::GeneralOom(_) => "general_oom",
            ModelSpec::Noom(_) => "noom",
            ModelSpec::KHqmm(_) => "khqmm",
            ModelSpec::LHqmm(_) => "lhqmm",
        }
    }

    pub fn as_likelihood(&self) -> &dyn LikelihoodModel {
        match self {
            ModelSpec::Hmm(m) => m,
            ModelSpec::StandardOom(m) => m,
            ModelSpec::GeneralOom(m) => m,
            ModelSpec::Noom(m) => m,
            ModelSpec::KHqmm(m) => m,
            ModelSpec::LHqmm(m) => m,
        }
    }

    pub fn sample(&self, length: usize, seed: u64) -> Result<Vec<usize>> {
        self.sample_with(length, &mut seeded_rng(seed))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Result<Vec<usize>> {
        match self {
            ModelSpec::Hmm(m) => sample_sequence_with(m, length, None, rng),
            ModelSpec::StandardOom(m) => sample_sequence_with(m, length, None, rng),
            ModelSpec::GeneralOom(m) => sample_sequence_with(m, length, None, rng),
            ModelSpec::Noom(m) => sample_sequence_with(m, length, None, rng),
            ModelSpec::KHqmm(m) => sample_sequence_with(m, length, None, rng),
            ModelSpec::LHqmm(m) => sample_sequence_with(m, length, None, rng),
        }
    }
}

impl LikelihoodModel for ModelSpec {
    fn alphabet_size(&self) -> usize {
        self.as_likelihood().alphabet_size()
    }

    fn log_likelihood(&self, seq: &[usize], burn_in: usize) -> Result<f64> {
        self.as_likelihood().log_likelihood(seq, burn_in)
    }
}
