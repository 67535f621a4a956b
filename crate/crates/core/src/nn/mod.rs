//! Feed-forward classifier with manual backpropagation.

mod loss;
mod mlp;
mod schedule;

pub use loss::{
    argmax, cross_entropy, kl_divergence, kl_grad_wrt_p_logits, kl_grad_wrt_q_logits, one_hot,
    softmax, LOG_CLAMP,
};
pub use mlp::{dot, extract_last_layer, ForwardTrace, GradientBundle, MlpModel};
pub use schedule::LrSchedule;
