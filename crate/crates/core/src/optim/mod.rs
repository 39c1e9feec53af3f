//! Losses and the Adam optimizer.

mod adam;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{batch_loss, mse, mse_grad, rmsle, rmsle_grad, LossKind};
