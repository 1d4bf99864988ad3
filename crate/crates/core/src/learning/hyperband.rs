use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::train::{Clock, Trainer, TrainingConfig, TrainingRun};
use crate::error::{Error, Result};
use crate::quantum::seeded_rng;

/// Uniform sampling ranges for the tuned hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub tau: (f64, f64),
    pub alpha: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            tau: (0.1, 1.0),
            alpha: (0.8, 1.0),
        }
    }
}

impl SearchSpace {
    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(self.tau) || !(self.tau.0 > 0.0) {
            return Err(Error::Config(format!("invalid tau range {:?}", self.tau)));
        }
        if !ok(self.alpha) || !(self.alpha.0 > 0.0 && self.alpha.1 <= 1.0) {
            return Err(Error::Config(format!("invalid alpha range {:?}", self.alpha)));
        }
        Ok(())
    }
}

/// One elimination round: how many configurations survive into it and how
/// many more epochs each of them trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Round {
    pub survivors: usize,
    pub epochs: usize,
}

/// The fixed schedules: 27@3, 9@9, 3@9, 1@27 and 9@3, 3@9, 1@27.
pub fn schedule(k: usize) -> Result<Vec<Round>> {
    let r = |survivors, epochs| Round { survivors, epochs };
    match k {
        27 => Ok(alloc::vec![r(27, 3), r(9, 9), r(3, 9), r(1, 27)]),
        9 => Ok(alloc::vec![r(9, 3), r(3, 9), r(1, 27)]),
        _ => Err(Error::Config(format!(
            "Hyperband supports k = 9 or k = 27 configurations, got {k}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub round: usize,
    pub trial: usize,
    pub tau: f64,
    pub alpha: f64,
    /// Epochs trained in this round.
    pub epochs: usize,
    /// Epochs trained so far, across all rounds.
    pub total_epochs: usize,
    /// DA after the last epoch of the round.
    pub validation_da: f64,
    /// Best DA seen by the trial so far; the elimination criterion.
    pub best_validation_da: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbandResult {
    pub best_trial: usize,
    pub best: TrainingRun,
    pub rounds: Vec<Round>,
    pub log: Vec<TrialRecord>,
    /// The run of every trial at the point it was eliminated or finished.
    pub trials: Vec<TrainingRun>,
}

/// Hyperband over τ and α with one of the fixed schedules; see
/// [`hyperband_with_schedule`].
pub fn hyperband_search(
    space: &SearchSpace,
    k: usize,
    data: &[Vec<usize>],
    arch: (usize, usize, usize),
    base: &TrainingConfig,
    validation: &[Vec<usize>],
    clock: &(dyn Clock + Sync),
) -> Result<HyperbandResult> {
    hyperband_with_schedule(space, &schedule(k)?, data, arch, base, validation, clock)
}

/// Successive halving: `rounds[0].survivors` configurations are drawn
/// uniformly from `space` (sharing `base`'s seed, so they differ only in τ
/// and α); each round the survivors resume training for that round's epochs
/// and the top `rounds[r + 1].survivors` by best validation DA go on. The
/// returned run is the trial with the highest validation DA seen anywhere.
pub fn hyperband_with_schedule(
    space: &SearchSpace,
    rounds: &[Round],
    data: &[Vec<usize>],
    arch: (usize, usize, usize),
    base: &TrainingConfig,
    validation: &[Vec<usize>],
    clock: &(dyn Clock + Sync),
) -> Result<HyperbandResult> {
    space.validate()?;
    if rounds.is_empty() || rounds.windows(2).any(|w| w[1].survivors > w[0].survivors) || rounds[0].survivors == 0 {
        return Err(Error::Config(
            "schedule must be non-empty with non-increasing survivor counts".into(),
        ));
    }
    let mut rng = seeded_rng(base.seed ^ 0x4879_7065_7262_616e);
    let mut trainers = Vec::with_capacity(rounds[0].survivors);
    for _ in 0..rounds[0].survivors {
        let config = TrainingConfig {
            tau: sample(&mut rng, space.tau),
            alpha: sample(&mut rng, space.alpha),
            ..base.clone()
        };
        trainers.push(Some(Trainer::new(data, validation, arch, config, clock)?));
    }
    let mut alive: Vec<usize> = (0..trainers.len()).collect();
    let mut trials: Vec<Option<TrainingRun>> = (0..trainers.len()).map(|_| None).collect();
    let mut log = Vec::new();
    for (r, round) in rounds.iter().enumerate() {
        alive.truncate(round.survivors);
        alive.sort_unstable();
        run_round(&mut trainers, &alive, round.epochs, clock)?;
        for &i in &alive {
            let t = trainers[i].as_ref().expect("alive trial");
            let cfg = t.config();
            log.push(TrialRecord {
                round: r,
                trial: i,
                tau: cfg.tau,
                alpha: cfg.alpha,
                epochs: round.epochs,
                total_epochs: t.epoch(),
                validation_da: t.records().last().map_or(f64::NAN, |x| x.validation_da),
                best_validation_da: t.best_validation_da(),
            });
        }
        // Stable order: best DA first, ties broken by trial index.
        alive.sort_by(|&a, &b| {
            let da = |i: usize| trainers[i].as_ref().expect("alive trial").best_validation_da();
            da(b).total_cmp(&da(a)).then(a.cmp(&b))
        });
        let keep = rounds.get(r + 1).map_or(alive.len(), |next| next.survivors);
        for &i in &alive[keep.min(alive.len())..] {
            trials[i] = Some(trainers[i].take().expect("alive trial").run()?);
        }
    }
    for &i in &alive {
        if let Some(t) = trainers[i].take() {
            trials[i] = Some(t.run()?);
        }
    }
    let trials: Vec<TrainingRun> = trials.into_iter().map(|t| t.expect("every trial finished")).collect();
    let best_trial = (0..trials.len())
        .max_by(|&a, &b| {
            trials[a]
                .best_validation_da
                .total_cmp(&trials[b].best_validation_da)
                .then(b.cmp(&a))
        })
        .expect("at least one trial");
    Ok(HyperbandResult {
        best_trial,
        best: trials[best_trial].clone(),
        rounds: rounds.to_vec(),
        log,
        trials,
    })
}

fn sample<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

#[cfg(not(feature = "parallel"))]
fn run_round(
    trainers: &mut [Option<Trainer<'_>>],
    alive: &[usize],
    epochs: usize,
    clock: &(dyn Clock + Sync),
) -> Result<()> {
    for &i in alive {
        trainers[i].as_mut().expect("alive trial").run_epochs(epochs, clock)?;
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn run_round(
    trainers: &mut [Option<Trainer<'_>>],
    alive: &[usize],
    epochs: usize,
    clock: &(dyn Clock + Sync),
) -> Result<()> {
    use rayon::prelude::*;
    let results: Vec<Result<()>> = trainers
        .par_iter_mut()
        .enumerate()
        .filter(|(i, _)| alive.binary_search(i).is_ok())
        .map(|(_, t)| t.as_mut().expect("alive trial").run_epochs(epochs, clock))
        .collect();
    results.into_iter().collect()
}
