use rand::Rng;

use super::conv::{conv1d_forward, Conv1dParams, DepthwiseConv1d, Padding};
use super::{inv_softplus, silu, softplus, Seq};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::ssm::{selective_scan, SelectiveInputs};

/// Selective state-space block.
///
/// `in_proj` produces a main path and a gate path. The main path goes
/// through a causal depthwise convolution and SiLU, then per-step
/// `Δ`, `B`, `C` are projected from it (`Δ` through a low-rank projection,
/// a bias and softplus) and every inner channel is scanned with its own
/// diagonal `A = −exp(a_log)`. The scan output is gated by `SiLU(gate)`,
/// projected back to `d_model` and added to the block input.
#[derive(Debug, Clone, PartialEq)]
pub struct MambaParams<T> {
    pub d_model: usize,
    pub d_inner: usize,
    pub d_state: usize,
    pub dt_rank: usize,
    pub in_proj: Conv1dParams<T>,
    pub conv: DepthwiseConv1d<T>,
    pub x_proj: Conv1dParams<T>,
    pub dt_proj: Conv1dParams<T>,
    /// `d_inner × d_state`, row-major.
    pub a_log: Vec<T>,
    pub out_proj: Conv1dParams<T>,
}

impl<T: Real> MambaParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn init<R: Rng + ?Sized>(
        d_model: usize,
        expand: usize,
        d_state: usize,
        d_conv: usize,
        dt_rank: usize,
        dt_range: (f64, f64),
        rng: &mut R,
    ) -> Self {
        let d_inner = expand * d_model;
        let in_proj = Conv1dParams::init(d_model, 2 * d_inner, 1, Padding::SameZero, false, rng);
        let conv = DepthwiseConv1d::init(d_inner, d_conv, rng);
        let x_proj = Conv1dParams::init(d_inner, dt_rank + 2 * d_state, 1, Padding::SameZero, false, rng);
        let mut dt_proj = Conv1dParams::init(dt_rank, d_inner, 1, Padding::SameZero, true, rng);
        // Δ-bias: softplus(bias) is log-uniform in [dt_min, dt_max]
        let (lo, hi) = (dt_range.0.ln(), dt_range.1.ln());
        for b in dt_proj.bias.as_mut().expect("dt_proj has a bias") {
            let dt = rng.random_range(lo..=hi).exp();
            *b = T::lift(inv_softplus(dt));
        }
        let a_log = (0..d_inner)
            .flat_map(|_| (0..d_state).map(|n| T::lift(((n + 1) as f64).ln())))
            .collect();
        let out_proj = Conv1dParams::init(d_inner, d_model, 1, Padding::SameZero, false, rng);
        Self {
            d_model,
            d_inner,
            d_state,
            dt_rank,
            in_proj,
            conv,
            x_proj,
            dt_proj,
            a_log,
            out_proj,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (dm, di, h, r) = (self.d_model, self.d_inner, self.d_state, self.dt_rank);
        let shapes = [
            (self.in_proj.in_channels, dm),
            (self.in_proj.out_channels, 2 * di),
            (self.conv.channels, di),
            (self.x_proj.in_channels, di),
            (self.x_proj.out_channels, r + 2 * h),
            (self.dt_proj.in_channels, r),
            (self.dt_proj.out_channels, di),
            (self.a_log.len(), di * h),
            (self.out_proj.in_channels, di),
            (self.out_proj.out_channels, dm),
        ];
        if shapes.iter().any(|(a, b)| a != b) {
            return Err(Error::mismatch("state-space block shapes do not chain"));
        }
        for p in [&self.in_proj, &self.x_proj, &self.dt_proj, &self.out_proj] {
            p.validate()?;
            if p.kernel_size != 1 {
                return Err(Error::invalid("projections must be 1×1"));
            }
        }
        if self.dt_proj.bias.is_none() || self.out_proj.bias.is_some() {
            return Err(Error::invalid("dt_proj needs a bias and out_proj must not have one"));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.in_proj.num_params()
            + self.conv.num_params()
            + self.x_proj.num_params()
            + self.dt_proj.num_params()
            + self.a_log.len()
            + self.out_proj.num_params()
    }

    /// Continuous diagonal `A` for inner channel `d`.
    pub fn a_row(&self, d: usize) -> Vec<f64> {
        self.a_log[d * self.d_state..(d + 1) * self.d_state]
            .iter()
            .map(|v| -v.lower().exp())
            .collect()
    }
}

/// Intermediate values kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct MambaCache<T> {
    /// `in_proj` output: main path channels then gate channels.
    pub xz: Seq<T>,
    /// Depthwise convolution output before SiLU.
    pub conv_pre: Seq<T>,
    pub u: Seq<T>,
    /// `x_proj` output: `dt_rank` low-rank Δ channels, then `B`, then `C`.
    pub dbc: Seq<T>,
    pub dt_pre: Seq<T>,
    /// `d_inner × T` step sizes.
    pub delta: Vec<f64>,
    /// `T × d_state` rows of `B` and `C`.
    pub b_rows: Vec<f64>,
    pub c_rows: Vec<f64>,
    /// Scan output, `d_inner × T`.
    pub y: Seq<T>,
}

pub fn mamba_block_forward<T: Real>(x: &Seq<T>, p: &MambaParams<T>) -> Result<Seq<T>> {
    mamba_block_forward_cached(x, p).map(|(y, _)| y)
}

/// Rows `[from, from + n)` of a channel-major sequence transposed to `T × n` f64.
pub(crate) fn rows_f64<T: Real>(s: &Seq<T>, from: usize, n: usize) -> Vec<f64> {
    let len = s.len();
    let mut out = vec![0.0; len * n];
    for k in 0..n {
        for (t, v) in s.channel(from + k).iter().enumerate() {
            out[t * n + k] = v.lower();
        }
    }
    out
}

pub fn mamba_block_forward_cached<T: Real>(
    x: &Seq<T>,
    p: &MambaParams<T>,
) -> Result<(Seq<T>, MambaCache<T>)> {
    if x.channels() != p.d_model {
        return Err(Error::mismatch(format!(
            "state-space block expects {} channels, got {}",
            p.d_model,
            x.channels()
        )));
    }
    let len = x.len();
    let (di, h, r) = (p.d_inner, p.d_state, p.dt_rank);

    let xz = conv1d_forward(x, &p.in_proj)?;
    let conv_pre = p.conv.forward(&xz.slice_channels(0, di))?;
    let mut u = conv_pre.clone();
    u.data_mut().iter_mut().for_each(|v| *v = silu(*v));

    let dbc = conv1d_forward(&u, &p.x_proj)?;
    let dt_pre = conv1d_forward(&dbc.slice_channels(0, r), &p.dt_proj)?;
    let delta: Vec<f64> = dt_pre.data().iter().map(|v| softplus(v.lower())).collect();
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::non_finite("step-size projection"));
    }
    let b_rows = rows_f64(&dbc, r, h);
    let c_rows = rows_f64(&dbc, r + h, h);

    let mut y = Seq::zeros(di, len);
    for d in 0..di {
        let sel = SelectiveInputs::new(&delta[d * len..(d + 1) * len], &b_rows, &c_rows, h)?;
        let xd: Vec<f64> = u.channel(d).iter().map(|v| v.lower()).collect();
        let yd = selective_scan(&xd, &sel, &p.a_row(d))?;
        for (o, v) in y.channel_mut(d).iter_mut().zip(yd) {
            *o = T::lift(v);
        }
    }

    let mut gated = y.clone();
    for d in 0..di {
        let g = xz.channel(di + d);
        for (o, &gv) in gated.channel_mut(d).iter_mut().zip(g) {
            *o *= silu(gv);
        }
    }
    let mut out = conv1d_forward(&gated, &p.out_proj)?;
    for (o, &xv) in out.data_mut().iter_mut().zip(x.data()) {
        *o += xv;
    }
    Ok((
        out,
        MambaCache {
            xz,
            conv_pre,
            u,
            dbc,
            dt_pre,
            delta,
            b_rows,
            c_rows,
            y,
        },
    ))
}
