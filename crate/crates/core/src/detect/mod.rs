//! Pseudo-clean detection: warm-up training, the small-loss partition, and
//! the moving-average robust labels that filter validation candidates.

mod gmm;
mod robust;
mod warmup;

pub use gmm::{fit_two_gaussians, partition_small_loss, GaussianMixture, PartitionResult};
pub use robust::{
    build_candidate_subset, update_moving_avg, CandidateSubset, MovingAvgUpdate, SampleState,
};
pub use warmup::{per_sample_losses, warmup_train, WarmupConfig, WarmupReport};
