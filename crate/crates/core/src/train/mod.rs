//! Reverse-mode gradients of the network, Adam and the training loop.

mod adam;
mod backward;
mod fd;
mod grads;
mod trainer;

use crate::error::{Error, Result};
use crate::real::Real;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use backward::{backward, backward_scaled};
pub use fd::{finite_difference_grad, gradient_check, GradCheck};
pub use grads::Gradients;
pub use trainer::{
    train, train_with, validation_snr_imp, EpochRecord, LossKind, TrainConfig, TrainOutcome,
};

/// Step of the finite-difference stencil used for gradient checks. Smaller
/// steps let rounding noise in the loss dominate the estimate.
pub const GRAD_CHECK_EPS: f64 = 3e-2;
/// Magnitude below which gradient entries are compared absolutely.
pub const GRAD_CHECK_FLOOR: f64 = 1e-9;

/// Mean squared error, accumulated in `f64`.
pub fn mse_loss<T: Real>(pred: &[T], target: &[T]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::mismatch(format!(
            "prediction has {} samples, target {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::empty("loss over an empty segment"));
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p.lower() - t.lower();
            d * d
        })
        .sum();
    Ok(sum / pred.len() as f64)
}
