use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Seq;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    /// Symmetric zero padding, output aligned with input.
    SameZero,
    /// Left padding only.
    Causal,
}

/// Dense 1-D convolution, weights laid out `out × in × kernel`.
///
/// A kernel size of 1 makes this a per-time-step linear map, which is how
/// the projections inside the state-space block are represented.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub padding: Padding,
    pub weight: Vec<T>,
    pub bias: Option<Vec<T>>,
}

impl<T: Real> Conv1dParams<T> {
    pub fn zeros(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        padding: Padding,
        with_bias: bool,
    ) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_size,
            padding,
            weight: vec![T::zero(); out_channels * in_channels * kernel_size],
            bias: with_bias.then(|| vec![T::zero(); out_channels]),
        }
    }

    /// Uniform fan-in initialization, `U(-1/√fan_in, 1/√fan_in)`.
    pub fn init<R: Rng + ?Sized>(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        padding: Padding,
        with_bias: bool,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(in_channels, out_channels, kernel_size, padding, with_bias);
        let bound = 1.0 / ((in_channels * kernel_size) as f64).sqrt();
        for w in &mut p.weight {
            *w = T::lift(rng.random_range(-bound..bound));
        }
        if let Some(b) = &mut p.bias {
            for v in b {
                *v = T::lift(rng.random_range(-bound..bound));
            }
        }
        p
    }

    /// 1×1 convolution whose weight matrix is the identity.
    pub fn identity(channels: usize) -> Self {
        let mut p = Self::zeros(channels, channels, 1, Padding::SameZero, true);
        for c in 0..channels {
            p.weight[c * channels + c] = T::one();
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 || self.kernel_size == 0 {
            return Err(Error::invalid("convolution sizes must be positive"));
        }
        if self.padding == Padding::SameZero && self.kernel_size % 2 == 0 {
            return Err(Error::invalid(format!(
                "same padding needs an odd kernel, got {}",
                self.kernel_size
            )));
        }
        if self.weight.len() != self.out_channels * self.in_channels * self.kernel_size {
            return Err(Error::mismatch("convolution weight has the wrong size"));
        }
        if let Some(b) = &self.bias {
            if b.len() != self.out_channels {
                return Err(Error::mismatch("convolution bias has the wrong size"));
            }
        }
        Ok(())
    }

    /// Number of zeros inserted before the first sample.
    pub fn left_pad(&self) -> usize {
        match self.padding {
            Padding::SameZero => (self.kernel_size - 1) / 2,
            Padding::Causal => self.kernel_size - 1,
        }
    }

    #[inline]
    pub fn w(&self, out: usize, inp: usize, j: usize) -> T {
        self.weight[(out * self.in_channels + inp) * self.kernel_size + j]
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.as_ref().map_or(0, Vec::len)
    }
}

/// Valid output range `[lo, hi)` for a tap at offset `shift` on length `len`.
#[inline]
pub(crate) fn tap_range(len: usize, shift: isize) -> (usize, usize) {
    let lo = ((-shift).max(0) as usize).min(len);
    let hi = (len as isize - shift).clamp(0, len as isize) as usize;
    (lo, hi.max(lo))
}

/// Length-preserving convolution:
/// `y[c,t] = bias[c] + Σ_{c',j} w[c,c',j]·x[c', t + j − left_pad]`.
pub fn conv1d_forward<T: Real>(x: &Seq<T>, p: &Conv1dParams<T>) -> Result<Seq<T>> {
    if x.channels() != p.in_channels {
        return Err(Error::mismatch(format!(
            "convolution expects {} input channels, got {}",
            p.in_channels,
            x.channels()
        )));
    }
    let len = x.len();
    let left = p.left_pad() as isize;
    let mut y = Seq::zeros(p.out_channels, len);
    for co in 0..p.out_channels {
        let out = y.channel_mut(co);
        if let Some(b) = &p.bias {
            out.fill(b[co]);
        }
        for ci in 0..p.in_channels {
            let inp = x.channel(ci);
            for j in 0..p.kernel_size {
                let w = p.w(co, ci, j);
                if w == T::zero() {
                    continue;
                }
                let shift = j as isize - left;
                let (lo, hi) = tap_range(len, shift);
                if lo == hi {
                    continue;
                }
                let src = &inp[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                for (o, &v) in out[lo..hi].iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
    }
    Ok(y)
}

/// Per-channel causal convolution, weights laid out `channels × kernel`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthwiseConv1d<T> {
    pub channels: usize,
    pub kernel_size: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> DepthwiseConv1d<T> {
    pub fn zeros(channels: usize, kernel_size: usize) -> Self {
        Self {
            channels,
            kernel_size,
            weight: vec![T::zero(); channels * kernel_size],
            bias: vec![T::zero(); channels],
        }
    }

    pub fn init<R: Rng + ?Sized>(channels: usize, kernel_size: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(channels, kernel_size);
        let bound = 1.0 / (kernel_size as f64).sqrt();
        for w in p.weight.iter_mut().chain(p.bias.iter_mut()) {
            *w = T::lift(rng.random_range(-bound..bound));
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// `y[c,t] = bias[c] + Σ_j w[c,j]·x[c, t + j − (k − 1)]`.
    pub fn forward(&self, x: &Seq<T>) -> Result<Seq<T>> {
        if x.channels() != self.channels {
            return Err(Error::mismatch("depthwise convolution channel mismatch"));
        }
        let len = x.len();
        let k = self.kernel_size;
        let mut y = Seq::zeros(self.channels, len);
        for c in 0..self.channels {
            let inp = x.channel(c);
            let out = y.channel_mut(c);
            out.fill(self.bias[c]);
            for j in 0..k {
                let w = self.weight[c * k + j];
                let shift = j as isize - (k as isize - 1);
                let (lo, hi) = tap_range(len, shift);
                if lo == hi {
                    continue;
                }
                let src = &inp[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                for (o, &v) in out[lo..hi].iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Straightforward quadruple loop over explicit zero padding.
    fn naive(x: &Seq<f64>, p: &Conv1dParams<f64>) -> Seq<f64> {
        let len = x.len();
        let left = p.left_pad();
        let padded_len = len + p.kernel_size - 1;
        let mut y = Seq::zeros(p.out_channels, len);
        for co in 0..p.out_channels {
            for t in 0..len {
                let mut acc = p.bias.as_ref().map_or(0.0, |b| b[co]);
                for ci in 0..p.in_channels {
                    let mut padded = vec![0.0; padded_len];
                    padded[left..left + len].copy_from_slice(x.channel(ci));
                    for j in 0..p.kernel_size {
                        acc += p.w(co, ci, j) * padded[t + j];
                    }
                }
                y.channel_mut(co)[t] = acc;
            }
        }
        y
    }

    fn random_seq(channels: usize, len: usize, rng: &mut ChaCha8Rng) -> Seq<f64> {
        Seq::from_fn(channels, len, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn centered_delta_is_identity() {
        let mut p = Conv1dParams::<f64>::zeros(1, 1, 3, Padding::SameZero, true);
        p.weight = vec![0.0, 1.0, 0.0];
        let x = Seq::from_vec(1, 5, vec![1.0, 2.0, -3.0, 4.0, 0.5]).unwrap();
        assert_eq!(conv1d_forward(&x, &p).unwrap(), x);
    }

    #[test]
    fn pointwise_identity_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_seq(4, 9, &mut rng);
        let p = Conv1dParams::<f64>::identity(4);
        assert_eq!(conv1d_forward(&x, &p).unwrap(), x);
    }

    #[test]
    fn matches_naive_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(cin, cout, k, pad) in &[
            (1, 3, 3, Padding::SameZero),
            (3, 2, 9, Padding::SameZero),
            (2, 2, 27, Padding::SameZero),
            (2, 4, 4, Padding::Causal),
            (5, 1, 1, Padding::SameZero),
        ] {
            let p = Conv1dParams::<f64>::init(cin, cout, k, pad, true, &mut rng);
            for len in [1, 5, 40] {
                let x = random_seq(cin, len, &mut rng);
                let fast = conv1d_forward(&x, &p).unwrap();
                let slow = naive(&x, &p);
                for (a, b) in fast.data().iter().zip(slow.data()) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn depthwise_matches_dense_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dw = DepthwiseConv1d::<f64>::init(3, 4, &mut rng);
        let mut dense = Conv1dParams::<f64>::zeros(3, 3, 4, Padding::Causal, true);
        for c in 0..3 {
            for j in 0..4 {
                dense.weight[(c * 3 + c) * 4 + j] = dw.weight[c * 4 + j];
            }
        }
        dense.bias = Some(dw.bias.clone());
        let x = random_seq(3, 17, &mut rng);
        let a = dw.forward(&x).unwrap();
        let b = naive(&x, &dense);
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let p = Conv1dParams::<f64>::zeros(2, 1, 3, Padding::SameZero, true);
        let x = Seq::<f64>::zeros(3, 10);
        assert!(conv1d_forward(&x, &p).is_err());
        let even = Conv1dParams::<f64>::zeros(1, 1, 4, Padding::SameZero, true);
        assert!(even.validate().is_err());
    }
}
