//! sEMG denoising toolkit.
//!
//! * [`ssm`]: diagonal state-space discretization, scans and kernels.
//! * [`nn`]: the denoising network (multi-kernel filter blocks around a
//!   selective state-space block) and its checkpoint format.
//! * [`train`]: reverse-mode gradients, Adam and the training loop.
//! * [`dsp`]: Butterworth design, filtering, resampling and the classical
//!   high-pass and template-subtraction baselines.
//! * [`data`]: signals, canonical files, contamination and synthetic corpora.
//! * [`metrics`]: SNR improvement, RMSE and feature-vector errors.
//! * [`denoise`]: name-addressable registry of denoisers.

pub mod data;
pub mod denoise;
pub mod dsp;
pub mod error;
pub mod fsutil;
pub mod metrics;
pub mod nn;
pub mod real;
pub mod signal;
pub mod ssm;
pub mod train;

pub use error::{Error, ErrorClass, Result};
pub use real::Real;
