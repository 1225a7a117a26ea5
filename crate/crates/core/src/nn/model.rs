use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{Conv1dParams, DepthwiseConv1d};
use super::hnf::{hnf_forward_cached, HnfCache, HnfParams};
use super::mamba::{mamba_block_forward_cached, MambaCache, MambaParams};
use super::Seq;
use crate::error::{Error, Result};
use crate::real::Real;

/// Published parameter counts of comparable denoisers, shown next to the
/// count of the configured model for context.
pub const REFERENCE_COUNTS: [(&str, usize); 3] =
    [("FCN", 137_801), ("SDEMG", 1_233_857), ("MSEMG", 279_937)];

/// Every integer that shapes the network, plus the initialization seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub expand: usize,
    pub d_state: usize,
    pub d_conv: usize,
    pub dt_rank: usize,
    pub hnf_kernels: Vec<usize>,
    pub hnf_branch_channels: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 32,
            expand: 2,
            d_state: 16,
            d_conv: 4,
            dt_rank: 2,
            hnf_kernels: vec![3, 9, 27],
            hnf_branch_channels: 8,
            dt_min: 1e-3,
            dt_max: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Smallest configuration used by gradient checks.
    pub fn tiny(seed: u64) -> Self {
        Self {
            d_model: 4,
            d_state: 2,
            dt_rank: 1,
            hnf_branch_channels: 2,
            seed,
            ..Self::default()
        }
    }

    pub fn d_inner(&self) -> usize {
        self.expand * self.d_model
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_model", self.d_model),
            ("expand", self.expand),
            ("d_state", self.d_state),
            ("d_conv", self.d_conv),
            ("dt_rank", self.dt_rank),
            ("hnf_branch_channels", self.hnf_branch_channels),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if self.hnf_kernels.is_empty() || self.hnf_kernels.iter().any(|k| k % 2 == 0) {
            return Err(Error::invalid("filter kernels must be a non-empty list of odd sizes"));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return Err(Error::invalid("need 0 < dt_min ≤ dt_max"));
        }
        Ok(())
    }

    /// Closed-form parameter count for this configuration.
    pub fn expected_parameter_count(&self) -> usize {
        let w = self.hnf_branch_channels;
        let ksum: usize = self.hnf_kernels.iter().sum();
        let nb = self.hnf_kernels.len();
        let (dm, di, h, r) = (self.d_model, self.d_inner(), self.d_state, self.dt_rank);
        let hnf = |cin: usize, cout: usize| cin * w * ksum + nb * w + nb * w * cout + cout;
        let mamba = dm * 2 * di + di * self.d_conv + di + di * (r + 2 * h) + r * di + di + di * h + di * dm;
        hnf(1, dm) + mamba + hnf(dm, 1)
    }
}

/// Full parameter set: filter block (1 → d_model), state-space block,
/// filter block (d_model → 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub hnf_in: HnfParams<T>,
    pub mamba: MambaParams<T>,
    pub hnf_out: HnfParams<T>,
}

/// Intermediate values of a full forward pass.
#[derive(Debug, Clone)]
pub struct ModelCache<T> {
    pub input: Seq<T>,
    pub hnf_in: HnfCache<T>,
    pub latent_in: Seq<T>,
    pub mamba: MambaCache<T>,
    pub latent_out: Seq<T>,
    pub hnf_out: HnfCache<T>,
}

impl<T: Real> ModelParams<T> {
    /// Seeded initialization; the seed comes from `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let c = &config;
        let hnf_in = HnfParams::init(1, c.hnf_branch_channels, &c.hnf_kernels, c.d_model, &mut rng);
        let mamba = MambaParams::init(
            c.d_model,
            c.expand,
            c.d_state,
            c.d_conv,
            c.dt_rank,
            (c.dt_min, c.dt_max),
            &mut rng,
        );
        let hnf_out = HnfParams::init(c.d_model, c.hnf_branch_channels, &c.hnf_kernels, 1, &mut rng);
        Ok(Self {
            config,
            hnf_in,
            mamba,
            hnf_out,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.hnf_in.validate()?;
        self.mamba.validate()?;
        self.hnf_out.validate()?;
        if self.hnf_in.in_channels() != 1
            || self.hnf_in.out_channels() != self.mamba.d_model
            || self.hnf_out.in_channels() != self.mamba.d_model
            || self.hnf_out.out_channels() != 1
        {
            return Err(Error::mismatch("block widths do not chain"));
        }
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(())
    }

    /// Every parameter tensor in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, &[T])> {
        fn conv<'a, T>(name: &str, p: &'a Conv1dParams<T>, out: &mut Vec<(String, &'a [T])>) {
            out.push((format!("{name}.weight"), &p.weight));
            if let Some(b) = &p.bias {
                out.push((format!("{name}.bias"), b));
            }
        }
        fn hnf<'a, T>(name: &str, p: &'a HnfParams<T>, out: &mut Vec<(String, &'a [T])>) {
            for (i, b) in p.branches.iter().enumerate() {
                conv(&format!("{name}.branch{i}"), b, out);
            }
            conv(&format!("{name}.fuse"), &p.fuse, out);
        }
        let mut out = Vec::new();
        hnf("hnf_in", &self.hnf_in, &mut out);
        let m = &self.mamba;
        conv("mamba.in_proj", &m.in_proj, &mut out);
        out.push(("mamba.conv.weight".into(), &m.conv.weight));
        out.push(("mamba.conv.bias".into(), &m.conv.bias));
        conv("mamba.x_proj", &m.x_proj, &mut out);
        conv("mamba.dt_proj", &m.dt_proj, &mut out);
        out.push(("mamba.a_log".into(), &m.a_log));
        conv("mamba.out_proj", &m.out_proj, &mut out);
        hnf("hnf_out", &self.hnf_out, &mut out);
        out
    }

    /// Mutable views in the same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<T>> {
        fn conv<'a, T>(p: &'a mut Conv1dParams<T>, out: &mut Vec<&'a mut Vec<T>>) {
            out.push(&mut p.weight);
            if let Some(b) = &mut p.bias {
                out.push(b);
            }
        }
        fn hnf<'a, T>(p: &'a mut HnfParams<T>, out: &mut Vec<&'a mut Vec<T>>) {
            for b in &mut p.branches {
                conv(b, out);
            }
            conv(&mut p.fuse, out);
        }
        let mut out = Vec::new();
        hnf(&mut self.hnf_in, &mut out);
        let m = &mut self.mamba;
        conv(&mut m.in_proj, &mut out);
        out.push(&mut m.conv.weight);
        out.push(&mut m.conv.bias);
        conv(&mut m.x_proj, &mut out);
        conv(&mut m.dt_proj, &mut out);
        out.push(&mut m.a_log);
        conv(&mut m.out_proj, &mut out);
        hnf(&mut self.hnf_out, &mut out);
        out
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.tensors().into_iter().flat_map(|(_, t)| t.iter().copied()).collect()
    }

    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != count_parameters(self) {
            return Err(Error::mismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                count_parameters(self)
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Same shapes, every value zero.
    pub fn zeros_like(&self) -> Self {
        self.map(|_| T::zero())
    }

    /// Element-wise conversion, e.g. to the `f64` shadow model.
    pub fn map<U: Real>(&self, f: impl Fn(T) -> U + Copy) -> ModelParams<U> {
        let conv = |p: &Conv1dParams<T>| Conv1dParams {
            in_channels: p.in_channels,
            out_channels: p.out_channels,
            kernel_size: p.kernel_size,
            padding: p.padding,
            weight: p.weight.iter().map(|&v| f(v)).collect(),
            bias: p.bias.as_ref().map(|b| b.iter().map(|&v| f(v)).collect()),
        };
        let hnf = |p: &HnfParams<T>| HnfParams {
            branches: p.branches.iter().map(conv).collect(),
            fuse: conv(&p.fuse),
            nonlinear_mask: p.nonlinear_mask.clone(),
        };
        let m = &self.mamba;
        ModelParams {
            config: self.config.clone(),
            hnf_in: hnf(&self.hnf_in),
            mamba: MambaParams {
                d_model: m.d_model,
                d_inner: m.d_inner,
                d_state: m.d_state,
                dt_rank: m.dt_rank,
                in_proj: conv(&m.in_proj),
                conv: DepthwiseConv1d {
                    channels: m.conv.channels,
                    kernel_size: m.conv.kernel_size,
                    weight: m.conv.weight.iter().map(|&v| f(v)).collect(),
                    bias: m.conv.bias.iter().map(|&v| f(v)).collect(),
                },
                x_proj: conv(&m.x_proj),
                dt_proj: conv(&m.dt_proj),
                a_log: m.a_log.iter().map(|&v| f(v)).collect(),
                out_proj: conv(&m.out_proj),
            },
            hnf_out: hnf(&self.hnf_out),
        }
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        self.map(|v| U::lift(v.lower()))
    }

    /// Forward pass keeping every intermediate needed by the reverse pass.
    pub fn forward_cached(&self, x: &[T]) -> Result<(Vec<T>, ModelCache<T>)> {
        if x.is_empty() {
            return Err(Error::empty("cannot denoise an empty segment"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("input segment contains non-finite samples"));
        }
        let input = Seq::from_vec(1, x.len(), x.to_vec())?;
        let (latent_in, hnf_in) = hnf_forward_cached(&input, &self.hnf_in)?;
        let (latent_out, mamba) = mamba_block_forward_cached(&latent_in, &self.mamba)?;
        let (y, hnf_out) = hnf_forward_cached(&latent_out, &self.hnf_out)?;
        Ok((
            y.into_vec(),
            ModelCache {
                input,
                hnf_in,
                latent_in,
                mamba,
                latent_out,
                hnf_out,
            },
        ))
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.forward_cached(x).map(|(y, _)| y)
    }
}

/// Denoise one segment: `hnf_out(mamba(hnf_in(x)))`.
pub fn msemg_forward<T: Real>(x: &[T], p: &ModelParams<T>) -> Result<Vec<T>> {
    p.forward(x)
}

/// Number of trainable scalars (weights, biases, `a_log` and the Δ-bias).
pub fn count_parameters<T: Real>(p: &ModelParams<T>) -> usize {
    p.hnf_in.num_params() + p.mamba.num_params() + p.hnf_out.num_params()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::conv::Padding;

    #[test]
    fn single_conv_count() {
        let p = Conv1dParams::<f32>::zeros(1, 1, 3, Padding::SameZero, true);
        assert_eq!(p.num_params(), 4);
    }

    #[test]
    fn counts_match_closed_form() {
        for cfg in [ModelConfig::default(), ModelConfig::tiny(0)] {
            let p = ModelParams::<f32>::init(cfg.clone()).unwrap();
            assert_eq!(count_parameters(&p), cfg.expected_parameter_count());
            assert_eq!(p.to_flat().len(), count_parameters(&p));
        }
        // Default: hnf_in 1136 + block 9856 + hnf_out 10033.
        assert_eq!(ModelConfig::default().expected_parameter_count(), 21_025);
    }

    #[test]
    fn tensor_views_agree() {
        let mut p = ModelParams::<f64>::init(ModelConfig::tiny(3)).unwrap();
        let names: Vec<usize> = p.tensors().iter().map(|(_, t)| t.len()).collect();
        let muts: Vec<usize> = p.tensors_mut().iter().map(|t| t.len()).collect();
        assert_eq!(names, muts);
        let flat = p.to_flat();
        let mut q = p.zeros_like();
        q.assign_flat(&flat).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn deterministic_init_and_forward() {
        let a = ModelParams::<f32>::init(ModelConfig::tiny(9)).unwrap();
        let b = ModelParams::<f32>::init(ModelConfig::tiny(9)).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let x: Vec<f32> = (0..64).map(|i| (i as f32 * 0.3).sin()).collect();
        let y1 = msemg_forward(&x, &a).unwrap();
        let y2 = msemg_forward(&x, &a).unwrap();
        assert_eq!(y1.len(), 64);
        assert_eq!(
            y1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zero_input_zero_biases() {
        let mut p = ModelParams::<f64>::init(ModelConfig::tiny(4)).unwrap();
        let mut zero_bias = |c: &mut Conv1dParams<f64>| {
            if let Some(b) = &mut c.bias {
                b.fill(0.0);
            }
        };
        for hnf in [&mut p.hnf_in, &mut p.hnf_out] {
            hnf.branches.iter_mut().for_each(&mut zero_bias);
            zero_bias(&mut hnf.fuse);
        }
        p.mamba.conv.bias.fill(0.0);
        let y = msemg_forward(&[0.0; 40], &p).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_finite_input() {
        let p = ModelParams::<f32>::init(ModelConfig::tiny(0)).unwrap();
        assert!(msemg_forward(&[0.0, f32::NAN], &p).is_err());
        assert!(msemg_forward(&[], &p).is_err());
    }
}
