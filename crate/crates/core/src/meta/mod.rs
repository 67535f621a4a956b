//! Per-batch meta updates: sample weights, pseudo-label gates and the
//! composite training loss.

mod gates;
mod step;

pub use gates::{
    lambda_gradient, lambda_update, omega_normalize, omega_raw, omega_update, pseudo_label, resolve_label,
    validation_loss, virtual_step, virtual_step_last_layer, MetaBatch,
};
pub use step::{draw_auxiliary, meta_train_step, training_loss, AuxSample, LossTerms, MetaConfig, MetaStepReport};
