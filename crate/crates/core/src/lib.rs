//! Sequential stochastic-process models with quantum-style latent states.
//!
//! The crate covers the chain HMM ⊂ OOM, NOOM ⊂ HQMM ⊂ OOM:
//!
//! * [`models`]: filtering, sequence probabilities and sampling for every
//!   family (HMMs, standard and general OOMs, NOOMs, Kraus- and
//!   Liouville-form HQMMs).
//! * [`representations`]: conversions between those families, the
//!   Liouville/Choi reshuffle, canonical Kraus decompositions and channel
//!   validity reports.
//! * [`learning`]: maximum-likelihood training of Kraus-form HQMMs by
//!   retraction-based gradient descent on the Stiefel manifold, plus a
//!   projection alternative and a Hyperband tuner.
//! * [`evaluation`]: description accuracy, likelihood classification,
//!   Baum–Welch, stratified k-fold splits and speedup extrapolation.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature. The `parallel` feature evaluates per-sequence gradient
//! terms and tuner trials on the rayon pool while keeping reductions in a
//! fixed order.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` deliberately treats NaN as failing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod evaluation;
pub mod learning;
pub mod models;
pub mod quantum;
pub mod representations;
pub mod tol;

pub use error::{Error, Result};
pub use quantum::{ComplexMatrix, ComplexVector, DensityMatrix, StiefelPoint, C64};
pub use tol::Tolerances;
