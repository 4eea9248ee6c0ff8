//! Batch-level losses: the conformal distribution-matching loss and a
//! softmax cross-entropy reference head.

mod conformal;
mod cross_entropy;

pub use conformal::{
    conformal_loss, loss_false, loss_huber, loss_l2, loss_mean, loss_var, mask_outputs,
    BatchMasks, LossWeights,
};
pub use cross_entropy::softmax_cross_entropy;
