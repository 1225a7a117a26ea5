//! The denoising network: a multi-kernel filter block lifts the signal into
//! a latent space, a selective state-space block models the sequence, and a
//! second filter block maps back to one channel.
//!
//! Activations are channel-major [`Seq`] buffers. The network is generic over
//! [`Real`] so that training runs in `f32` while gradient checks run the
//! identical code in `f64`; the scan inside the state-space block always
//! runs in `f64`.

mod checkpoint;
mod conv;
mod hnf;
mod mamba;
mod model;

use crate::error::{Error, Result};
use crate::real::Real;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, sidecar_path, write_checkpoint,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use conv::{conv1d_forward, Conv1dParams, DepthwiseConv1d, Padding};
pub use hnf::{hnf_forward, hnf_forward_cached, HnfCache, HnfParams};
pub use mamba::{mamba_block_forward, mamba_block_forward_cached, MambaCache, MambaParams};
pub use model::{
    count_parameters, msemg_forward, ModelCache, ModelConfig, ModelParams, REFERENCE_COUNTS,
};

pub(crate) use conv::tap_range;

/// Channel-major multichannel sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq<T> {
    channels: usize,
    len: usize,
    data: Vec<T>,
}

impl<T: Real> Seq<T> {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Self {
            channels,
            len,
            data: vec![T::zero(); channels * len],
        }
    }

    pub fn from_vec(channels: usize, len: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * len {
            return Err(Error::mismatch(format!(
                "{} values do not fill {channels} channels of {len} samples",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            len,
            data,
        })
    }

    pub fn from_fn(channels: usize, len: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(channels * len);
        for c in 0..channels {
            for t in 0..len {
                data.push(f(c, t));
            }
        }
        Self {
            channels,
            len,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channel(&self, c: usize) -> &[T] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Channels `[from, to)` as a new sequence.
    pub fn slice_channels(&self, from: usize, to: usize) -> Self {
        Self {
            channels: to - from,
            len: self.len,
            data: self.data[from * self.len..to * self.len].to_vec(),
        }
    }

    pub fn concat_channels(parts: &[Seq<T>]) -> Result<Self> {
        let len = parts.first().map_or(0, |p| p.len);
        if parts.iter().any(|p| p.len != len) {
            return Err(Error::mismatch("cannot concatenate sequences of different lengths"));
        }
        let channels = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(channels * len);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Self {
            channels,
            len,
            data,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub(crate) fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

#[inline]
pub(crate) fn silu<T: Real>(z: T) -> T {
    z * sigmoid(z)
}

/// `d silu(z) / dz = σ(z)·(1 + z·(1 − σ(z)))`.
#[inline]
pub(crate) fn silu_grad<T: Real>(z: T) -> T {
    let s = sigmoid(z);
    s * (T::one() + z * (T::one() - s))
}

#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for positive arguments.
pub(crate) fn inv_softplus(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}
