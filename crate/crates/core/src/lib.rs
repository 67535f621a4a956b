//! Noisy-label meta-learning with a utility-maximising validation set.
//!
//! The pipeline corrupts a dataset with label noise and class imbalance,
//! detects a pseudo-clean subset with a small-loss mixture model, greedily
//! builds a balanced validation set that is informative for sample
//! reweighting and likely to be clean, and trains a classifier with
//! per-sample meta weights and pseudo-label gates.
//!
//! Modules follow the pipeline order:
//!
//! - [`nn`]: classifier, losses, backpropagation, learning-rate schedule
//! - [`data`]: synthetic generators, CSV I/O, noise and imbalance injection, mixup
//! - [`detect`]: warm-up, small-loss partition, robust labels, candidate subset
//! - [`select`]: informativeness and cleanliness objectives, greedy selection
//! - [`meta`]: meta-weight and pseudo-label gate updates, training loss
//! - [`harness`]: configuration, experiment loop, baselines, metrics
//! - [`oracle`]: independent reference computations used by `oracle-check`

pub mod data;
pub mod detect;
mod error;
pub mod harness;
pub mod meta;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod select;

pub use error::{Error, Result};
