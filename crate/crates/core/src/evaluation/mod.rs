//! Description accuracy, likelihood classification, the Baum–Welch
//! baseline, stratified folds and speedup extrapolation.

mod baum_welch;
mod classify;
mod da;
mod kfold;
mod speedup;

pub use baum_welch::{baum_welch, baum_welch_with, em_from, BaumWelchResult, EmOptions};
pub use classify::{argmax_label, classify, evaluate_fold, ClassificationResult, FoldOutcome};
pub use da::{da_from_log_likelihood, description_accuracy, squash, DaScore};
pub use kfold::{kfold_split, Fold};
pub use speedup::{estimate_speedup, SpeedupEstimate, CONVERGENCE_TOLERANCE, FIT_POINTS};
