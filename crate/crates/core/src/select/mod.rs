//! Validation-set selection.
//!
//! A two-level greedy search over last-layer features: the lower level picks
//! `K` samples per class that maximise informativeness (the best same-class
//! feature-times-gradient alignment each pool sample can obtain), the upper
//! level keeps the `M` of them per class with the largest same-class feature
//! similarity to the rest of the pool.

mod brute;
mod check;
mod greedy;
mod objectives;

pub use brute::{brute_force_oracle, Objective, SEARCH_GUARD};
pub use check::check_selection;
pub use greedy::{
    greedy_lower, greedy_upper, greedy_weight_sum, max_utility, GreedyOutcome, SelectionResult,
    SelectionWarning, Stage,
};
pub use objectives::{
    clean_objective, info_objective, iota, utility_features, CleanSimilarity, UtilityFeatures,
};
