//! Maximum-likelihood training of Kraus-form HQMMs on the Stiefel manifold.

mod gradient;
mod hyperband;
mod train;
mod update;

pub use gradient::{batch_loss, conjugate_gradient, loss_and_gradient, GradientStack};
pub use hyperband::{
    hyperband_search, hyperband_with_schedule, schedule, HyperbandResult, Round, SearchSpace, TrialRecord,
};
#[cfg(feature = "std")]
pub use train::{train, WallClock};
pub use train::{
    train_with_clock, Clock, EpochRecord, FrozenClock, Trainer, TrainingConfig, TrainingRun, UpdateScheme,
};
pub use update::{
    momentum_renorm, projection_update, reorthonormalize, tangent_component, wen_yin_retraction, Momentum,
    MAX_RETRACTION_CONDITION,
};
