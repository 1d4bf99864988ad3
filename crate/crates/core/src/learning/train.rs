use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use super::gradient::loss_and_gradient;
use super::update::{projection_update, reorthonormalize, wen_yin_retraction, Momentum};
use crate::error::{Error, Result};
use crate::evaluation::description_accuracy;
use crate::models::KHqmm;
use crate::quantum::{random_density, seeded_rng, DensityMatrix, StiefelPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateScheme {
    WenYin,
    Projection,
}

impl UpdateScheme {
    pub fn name(self) -> &'static str {
        match self {
            UpdateScheme::WenYin => "wen-yin",
            UpdateScheme::Projection => "projection",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wen-yin" | "wen_yin" => Ok(UpdateScheme::WenYin),
            "projection" => Ok(UpdateScheme::Projection),
            other => Err(Error::Config(format!("unknown update scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub tau: f64,
    /// Per-epoch step-size decay.
    pub alpha: f64,
    /// Momentum coefficient.
    pub beta: f64,
    /// Batches per epoch; 0 uses every batch.
    pub batches: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub update: UpdateScheme,
    /// Steps between feasibility checks.
    pub reorth_period: usize,
    pub reorth_tolerance: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            tau: 0.75,
            alpha: 0.92,
            beta: 0.9,
            batches: 0,
            epochs: 60,
            batch_size: 30,
            burn_in: 100,
            seed: 0,
            update: UpdateScheme::WenYin,
            reorth_period: 50,
            reorth_tolerance: 1e-8,
        }
    }
}

impl TrainingConfig {
    /// Defaults for the splice-style classification task.
    pub fn splice() -> Self {
        Self {
            tau: 0.8,
            alpha: 0.9,
            burn_in: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.reorth_period == 0 {
            return Err(Error::Config("reorthonormalization period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Monotone time source in seconds.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Clock that never advances; for `no_std` builds and deterministic tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct WallClock(std::time::Instant);

#[cfg(feature = "std")]
impl Default for WallClock {
    fn default() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean batch loss over the epoch (full training loss for epoch 0).
    pub loss: f64,
    pub validation_da: f64,
    /// Cumulative training time.
    pub seconds: f64,
    /// Largest `‖κ†κ − I‖_F` observed after any step of the epoch.
    pub max_feasibility: f64,
    /// Step-size τ in effect during the epoch.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub config: TrainingConfig,
    pub arch: (usize, usize, usize),
    /// Epoch 0 is the initialization.
    pub records: Vec<EpochRecord>,
    pub best: KHqmm,
    pub best_epoch: usize,
    pub best_validation_da: f64,
    pub final_model: KHqmm,
    pub skipped_batches: usize,
    pub step_halvings: usize,
    pub reprojections: usize,
}

/// Resumable training state; [`Trainer::run_epochs`] may be called
/// repeatedly, which is how the tuner extends surviving trials.
pub struct Trainer<'a> {
    data: &'a [Vec<usize>],
    validation: &'a [Vec<usize>],
    config: TrainingConfig,
    arch: (usize, usize, usize),
    kappa: StiefelPoint,
    rho0: DensityMatrix,
    momentum: Momentum,
    tau: f64,
    rng: ChaCha8Rng,
    epoch: usize,
    steps: usize,
    seconds: f64,
    records: Vec<EpochRecord>,
    best: KHqmm,
    best_epoch: usize,
    best_validation_da: f64,
    skipped_batches: usize,
    step_halvings: usize,
    reprojections: usize,
}

const MAX_STEP_RETRIES: usize = 5;

impl<'a> Trainer<'a> {
    /// Random initialization (κ Haar-like, ρ₀ Ginibre) and the epoch-0
    /// record. An empty validation set falls back to the training data.
    pub fn new(
        data: &'a [Vec<usize>],
        validation: &'a [Vec<usize>],
        arch: (usize, usize, usize),
        config: TrainingConfig,
        clock: &dyn Clock,
    ) -> Result<Self> {
        config.validate()?;
        let (n, s, w) = arch;
        if n == 0 || s == 0 || w == 0 {
            return Err(Error::Config(format!(
                "architecture ({n}, {s}, {w}) has a zero dimension"
            )));
        }
        if data.is_empty() {
            return Err(Error::Input("training data is empty".into()));
        }
        let validation = if validation.is_empty() { data } else { validation };
        let start = clock.now();
        let mut rng = seeded_rng(config.seed);
        let kappa = StiefelPoint::random(n, s, w, rng.next_u64())?;
        let rho0 = random_density(n, rng.next_u64())?;
        let model = KHqmm::new(kappa.clone(), rho0.clone())?;
        let loss = super::gradient::batch_loss(&kappa, &rho0, data, config.burn_in).map_err(|e| Error::Training {
            epoch: 0,
            batch: 0,
            source: alloc::boxed::Box::new(e),
        })?;
        let da = description_accuracy(&model, validation, config.burn_in)?.mean;
        let seconds = clock.now() - start;
        let record = EpochRecord {
            epoch: 0,
            loss,
            validation_da: da,
            seconds,
            max_feasibility: kappa.feasibility_residual(),
            tau: config.tau,
        };
        Ok(Self {
            data,
            validation,
            momentum: Momentum::new(config.beta, kappa.matrix().nrows(), n),
            tau: config.tau,
            config,
            arch,
            kappa,
            rho0,
            rng,
            epoch: 0,
            steps: 0,
            seconds,
            records: alloc::vec![record],
            best: model,
            best_epoch: 0,
            best_validation_da: da,
            skipped_batches: 0,
            step_halvings: 0,
            reprojections: 0,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn best_validation_da(&self) -> f64 {
        self.best_validation_da
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn kappa(&self) -> &StiefelPoint {
        &self.kappa
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    fn apply_update(&self, direction: &crate::quantum::ComplexMatrix, tau: f64) -> Result<StiefelPoint> {
        match self.config.update {
            UpdateScheme::WenYin => wen_yin_retraction(&self.kappa, direction, tau),
            UpdateScheme::Projection => projection_update(&self.kappa, direction, tau),
        }
    }

    fn check_feasibility(&mut self) -> Result<()> {
        if self.kappa.feasibility_residual() > self.config.reorth_tolerance {
            self.kappa = reorthonormalize(&self.kappa)?;
            self.reprojections += 1;
        }
        Ok(())
    }

    fn run_epoch(&mut self) -> Result<EpochRecord> {
        let epoch = self.epoch + 1;
        let mut order: Vec<usize> = (0..self.data.len()).collect();
        order.shuffle(&mut self.rng);
        let total_batches = order.len().div_ceil(self.config.batch_size);
        let batches = if self.config.batches == 0 {
            total_batches
        } else {
            self.config.batches.min(total_batches)
        };
        let mut loss_sum = 0.0;
        let mut max_feasibility: f64 = 0.0;
        for (b, chunk) in order.chunks(self.config.batch_size).take(batches).enumerate() {
            let batch: Vec<Vec<usize>> = chunk.iter().map(|&i| self.data[i].clone()).collect();
            let (loss, grad) =
                loss_and_gradient(&self.kappa, &self.rho0, &batch, self.config.burn_in).map_err(|e| {
                    Error::Training {
                        epoch,
                        batch: b,
                        source: alloc::boxed::Box::new(e),
                    }
                })?;
            loss_sum += loss;
            let direction = self.momentum.step(&grad.matrix);
            let mut tau = self.tau;
            let mut updated = None;
            for attempt in 0..=MAX_STEP_RETRIES {
                match self.apply_update(&direction, tau) {
                    Ok(k) => {
                        updated = Some(k);
                        break;
                    }
                    Err(e @ (Error::Step { .. } | Error::Projection(_))) => {
                        log::warn!("epoch {epoch}, batch {b}: {e}; halving step (attempt {})", attempt + 1);
                        tau /= 2.0;
                        self.step_halvings += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
            match updated {
                Some(k) => self.kappa = k,
                None => {
                    log::warn!("epoch {epoch}, batch {b}: skipped after {MAX_STEP_RETRIES} step reductions");
                    self.skipped_batches += 1;
                }
            }
            self.steps += 1;
            if self.steps.is_multiple_of(self.config.reorth_period) {
                self.check_feasibility()?;
            }
            max_feasibility = max_feasibility.max(self.kappa.feasibility_residual());
        }
        self.check_feasibility()?;
        max_feasibility = max_feasibility.max(self.kappa.feasibility_residual());
        let epoch_tau = self.tau;
        self.tau *= self.config.alpha;
        self.epoch = epoch;
        let model = KHqmm::new_unchecked(self.kappa.clone(), self.rho0.clone())?;
        let da = description_accuracy(&model, self.validation, self.config.burn_in)?.mean;
        if da > self.best_validation_da {
            self.best_validation_da = da;
            self.best_epoch = epoch;
            self.best = model;
        }
        Ok(EpochRecord {
            epoch,
            loss: loss_sum / batches.max(1) as f64,
            validation_da: da,
            seconds: 0.0,
            max_feasibility,
            tau: epoch_tau,
        })
    }

    /// Trains `epochs` more epochs; time spent outside this call is not
    /// counted.
    pub fn run_epochs(&mut self, epochs: usize, clock: &dyn Clock) -> Result<()> {
        for _ in 0..epochs {
            let start = clock.now();
            let mut record = self.run_epoch()?;
            self.seconds += clock.now() - start;
            record.seconds = self.seconds;
            log::info!(
                "epoch {} loss {:.6} validation DA {:.6} feasibility {:.2e}",
                record.epoch,
                record.loss,
                record.validation_da,
                record.max_feasibility
            );
            self.records.push(record);
        }
        Ok(())
    }

    pub fn run(&self) -> Result<TrainingRun> {
        Ok(TrainingRun {
            config: self.config.clone(),
            arch: self.arch,
            records: self.records.clone(),
            best: self.best.clone(),
            best_epoch: self.best_epoch,
            best_validation_da: self.best_validation_da,
            final_model: KHqmm::new_unchecked(self.kappa.clone(), self.rho0.clone())?,
            skipped_batches: self.skipped_batches,
            step_halvings: self.step_halvings,
            reprojections: self.reprojections,
        })
    }
}

/// Runs the configured number of epochs from a fresh initialization.
pub fn train_with_clock(
    data: &[Vec<usize>],
    arch: (usize, usize, usize),
    config: &TrainingConfig,
    validation: &[Vec<usize>],
    clock: &dyn Clock,
) -> Result<TrainingRun> {
    let mut trainer = Trainer::new(data, validation, arch, config.clone(), clock)?;
    trainer.run_epochs(config.epochs, clock)?;
    trainer.run()
}

#[cfg(feature = "std")]
pub fn train(
    data: &[Vec<usize>],
    arch: (usize, usize, usize),
    config: &TrainingConfig,
    validation: &[Vec<usize>],
) -> Result<TrainingRun> {
    train_with_clock(data, arch, config, validation, &WallClock::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample_sequence, Hmm};
    use alloc::vec;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn zero_epochs_is_initialization_only() {
        let data = vec![vec![0, 1, 0, 1, 1]; 3];
        let cfg = TrainingConfig {
            epochs: 0,
            burn_in: 1,
            ..TrainingConfig::default()
        };
        let run = train_with_clock(&data, (2, 2, 1), &cfg, &[], &FrozenClock).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.records[0].epoch, 0);
        assert_eq!(run.best, run.final_model);
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainingConfig {
                tau: 0.0,
                ..Default::default()
            },
            TrainingConfig {
                alpha: 1.5,
                ..Default::default()
            },
            TrainingConfig {
                beta: 1.0,
                ..Default::default()
            },
            TrainingConfig {
                batch_size: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))));
        }
        assert!(UpdateScheme::parse("adam").is_err());
    }

    #[test]
    fn single_state_learns_symbol_frequencies() {
        let c = [0.5, 0.3, 0.2];
        let gen = Hmm::new(
            DMatrix::identity(1, 1),
            DMatrix::from_column_slice(3, 1, &c),
            DVector::from_element(1, 1.),
        )
        .unwrap();
        let data: Vec<Vec<usize>> = (0..20).map(|i| sample_sequence(&gen, 100, None, i).unwrap()).collect();
        let mut freq = [0.0; 3];
        for y in data.iter().flatten() {
            freq[*y] += 1.0;
        }
        let total: f64 = freq.iter().sum();
        let cfg = TrainingConfig {
            burn_in: 0,
            batch_size: 5,
            epochs: 60,
            ..TrainingConfig::default()
        };
        let run = train_with_clock(&data, (1, 3, 1), &cfg, &[], &FrozenClock).unwrap();
        for (y, f) in freq.iter().enumerate() {
            let k = run.final_model.kraus_for(y)[0][(0, 0)];
            assert!(
                (k.norm_sqr() - f / total).abs() < 0.01,
                "{y}: {} vs {}",
                k.norm_sqr(),
                f / total
            );
        }
        for r in &run.records {
            assert!(r.max_feasibility <= 1e-8);
            assert!(run.best_validation_da >= r.validation_da);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let gen = Hmm::random(2, 2, 3).unwrap();
        let data: Vec<Vec<usize>> = (0..6).map(|i| sample_sequence(&gen, 40, None, i).unwrap()).collect();
        let cfg = TrainingConfig {
            epochs: 3,
            batch_size: 2,
            burn_in: 5,
            seed: 11,
            ..TrainingConfig::default()
        };
        let a = train_with_clock(&data, (2, 2, 2), &cfg, &data[..2], &FrozenClock).unwrap();
        let b = train_with_clock(&data, (2, 2, 2), &cfg, &data[..2], &FrozenClock).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 4);
    }

    #[test]
    fn impossible_batch_aborts_with_location() {
        // Symbol 1 can never follow the first step of this one-state model.
        let data = vec![vec![0, 0, 1]];
        let mut cfg = TrainingConfig {
            burn_in: 0,
            epochs: 1,
            ..Default::default()
        };
        cfg.seed = 1;
        let gen = Hmm::new(
            DMatrix::identity(1, 1),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DVector::from_element(1, 1.),
        )
        .unwrap();
        let q = crate::representations::hmm_to_khqmm(&gen).unwrap();
        let err = super::super::gradient::batch_loss(q.kraus(), q.rho0(), &data, 0).unwrap_err();
        assert!(err.is_zero_probability() || matches!(err, Error::InSequence { .. }));
        let _ = train_with_clock(&data, (1, 2, 1), &cfg, &[], &FrozenClock).unwrap();
    }
}
