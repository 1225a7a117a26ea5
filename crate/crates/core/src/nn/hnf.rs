use rand::Rng;

use super::conv::{conv1d_forward, Conv1dParams, Padding};
use super::{silu, Seq};
use crate::error::{Error, Result};
use crate::real::Real;

/// Multi-kernel filter block.
///
/// Parallel same-padded convolutions with different kernel sizes look at the
/// input at several resolutions. Their outputs are concatenated; every
/// other concatenated channel (even indices) passes through SiLU while the
/// rest stay linear, and a 1×1 convolution fuses the result.
#[derive(Debug, Clone, PartialEq)]
pub struct HnfParams<T> {
    pub branches: Vec<Conv1dParams<T>>,
    pub fuse: Conv1dParams<T>,
    pub nonlinear_mask: Vec<bool>,
}

/// Alternating mask with `⌈n/2⌉` nonlinear channels.
pub(crate) fn alternating_mask(n: usize) -> Vec<bool> {
    (0..n).map(|c| c % 2 == 0).collect()
}

impl<T: Real> HnfParams<T> {
    pub fn init<R: Rng + ?Sized>(
        in_channels: usize,
        branch_channels: usize,
        kernels: &[usize],
        out_channels: usize,
        rng: &mut R,
    ) -> Self {
        let branches: Vec<_> = kernels
            .iter()
            .map(|&k| Conv1dParams::init(in_channels, branch_channels, k, Padding::SameZero, true, rng))
            .collect();
        let concat = branch_channels * kernels.len();
        let fuse = Conv1dParams::init(concat, out_channels, 1, Padding::SameZero, true, rng);
        Self {
            branches,
            fuse,
            nonlinear_mask: alternating_mask(concat),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.branches.first().map_or(0, |b| b.in_channels)
    }

    pub fn out_channels(&self) -> usize {
        self.fuse.out_channels
    }

    pub fn concat_channels(&self) -> usize {
        self.branches.iter().map(|b| b.out_channels).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(Error::invalid("filter block needs at least one branch"));
        }
        let cin = self.in_channels();
        for b in &self.branches {
            b.validate()?;
            if b.in_channels != cin {
                return Err(Error::mismatch("filter branches disagree on input channels"));
            }
        }
        self.fuse.validate()?;
        if self.fuse.kernel_size != 1 {
            return Err(Error::invalid("fuse convolution must be 1×1"));
        }
        let concat = self.concat_channels();
        if self.fuse.in_channels != concat || self.nonlinear_mask.len() != concat {
            return Err(Error::mismatch("fuse width differs from concatenated branch width"));
        }
        let nonlinear = self.nonlinear_mask.iter().filter(|&&m| m).count();
        if nonlinear != concat.div_ceil(2) {
            return Err(Error::invalid("exactly half (rounded up) of the channels must be nonlinear"));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.branches.iter().map(Conv1dParams::num_params).sum::<usize>() + self.fuse.num_params()
    }
}

/// Intermediate values kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct HnfCache<T> {
    /// Concatenated branch outputs before the activation.
    pub pre: Seq<T>,
    /// Concatenated branch outputs after the activation (fuse input).
    pub act: Seq<T>,
}

pub fn hnf_forward<T: Real>(x: &Seq<T>, p: &HnfParams<T>) -> Result<Seq<T>> {
    hnf_forward_cached(x, p).map(|(y, _)| y)
}

pub fn hnf_forward_cached<T: Real>(x: &Seq<T>, p: &HnfParams<T>) -> Result<(Seq<T>, HnfCache<T>)> {
    if x.channels() != p.in_channels() {
        return Err(Error::mismatch(format!(
            "filter block expects {} channels, got {}",
            p.in_channels(),
            x.channels()
        )));
    }
    let outs = p
        .branches
        .iter()
        .map(|b| conv1d_forward(x, b))
        .collect::<Result<Vec<_>>>()?;
    let pre = Seq::concat_channels(&outs)?;
    let mut act = pre.clone();
    for (c, &nonlinear) in p.nonlinear_mask.iter().enumerate() {
        if nonlinear {
            for v in act.channel_mut(c) {
                *v = silu(*v);
            }
        }
    }
    let y = conv1d_forward(&act, &p.fuse)?;
    Ok((y, HnfCache { pre, act }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_in_zero_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = HnfParams::<f64>::init(1, 4, &[3, 9, 27], 8, &mut rng);
        for b in p.branches.iter_mut() {
            b.bias.as_mut().unwrap().fill(0.0);
        }
        p.fuse.bias.as_mut().unwrap().fill(0.0);
        let y = hnf_forward(&Seq::zeros(1, 50), &p).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_block_is_a_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let branch = Conv1dParams::<f64>::init(2, 3, 5, Padding::SameZero, true, &mut rng);
        let p = HnfParams {
            branches: vec![branch.clone()],
            fuse: Conv1dParams::identity(3),
            nonlinear_mask: vec![false; 3],
        };
        let x = Seq::from_fn(2, 30, |c, t| ((c + 1) as f64 * t as f64 * 0.3).sin());
        assert_eq!(hnf_forward(&x, &p).unwrap(), conv1d_forward(&x, &branch).unwrap());
    }

    #[test]
    fn shape_preserved_over_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kernels in [vec![3], vec![9], vec![27], vec![3, 9], vec![3, 9, 27]] {
            for (cin, cout) in [(1, 8), (8, 1), (4, 4)] {
                let p = HnfParams::<f32>::init(cin, 3, &kernels, cout, &mut rng);
                p.validate().unwrap();
                for len in [1, 13, 27, 100] {
                    let x = Seq::from_fn(cin, len, |c, t| (c + t) as f32 * 0.01);
                    let y = hnf_forward(&x, &p).unwrap();
                    assert_eq!((y.channels(), y.len()), (cout, len));
                }
            }
        }
    }

    #[test]
    fn mask_is_half_nonlinear() {
        for n in 1..12 {
            let m = alternating_mask(n);
            assert_eq!(m.iter().filter(|&&b| b).count(), n.div_ceil(2));
        }
    }
}
