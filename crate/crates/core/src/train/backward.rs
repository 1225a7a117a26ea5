//! Reverse-mode pass through the fixed network graph.

use crate::error::{Error, Result};
use crate::nn::{
    tap_range, Conv1dParams, DepthwiseConv1d, HnfCache, HnfParams, MambaCache, MambaParams, ModelParams, Seq,
};
use crate::nn::{sigmoid, silu, silu_grad};
use crate::real::Real;
use crate::ssm::{selective_scan_vjp, SelectiveInputs};

use super::{mse_loss, Gradients};

/// Accumulate weight and bias cotangents of a convolution into `g`; returns
/// the input cotangent when asked for.
pub(crate) fn conv1d_backward<T: Real>(
    x: &Seq<T>,
    p: &Conv1dParams<T>,
    dy: &Seq<T>,
    g: &mut Conv1dParams<T>,
    need_dx: bool,
) -> Option<Seq<T>> {
    let len = x.len();
    let left = p.left_pad() as isize;
    let k = p.kernel_size;
    let mut dx = need_dx.then(|| Seq::zeros(p.in_channels, len));
    for co in 0..p.out_channels {
        let d = dy.channel(co);
        if let Some(gb) = &mut g.bias {
            gb[co] += d.iter().copied().sum::<T>();
        }
        for ci in 0..p.in_channels {
            let inp = x.channel(ci);
            for j in 0..k {
                let shift = j as isize - left;
                let (lo, hi) = tap_range(len, shift);
                if lo == hi {
                    continue;
                }
                let (slo, shi) = ((lo as isize + shift) as usize, (hi as isize + shift) as usize);
                let src = &inp[slo..shi];
                let idx = (co * p.in_channels + ci) * k + j;
                g.weight[idx] += d[lo..hi].iter().zip(src).map(|(a, b)| *a * *b).sum::<T>();
                if let Some(dx) = &mut dx {
                    let w = p.weight[idx];
                    for (o, &dv) in dx.channel_mut(ci)[slo..shi].iter_mut().zip(&d[lo..hi]) {
                        *o += w * dv;
                    }
                }
            }
        }
    }
    dx
}

pub(crate) fn depthwise_backward<T: Real>(
    x: &Seq<T>,
    p: &DepthwiseConv1d<T>,
    dy: &Seq<T>,
    g: &mut DepthwiseConv1d<T>,
) -> Seq<T> {
    let len = x.len();
    let k = p.kernel_size;
    let mut dx = Seq::zeros(p.channels, len);
    for c in 0..p.channels {
        let d = dy.channel(c);
        let inp = x.channel(c);
        g.bias[c] += d.iter().copied().sum::<T>();
        for j in 0..k {
            let shift = j as isize - (k as isize - 1);
            let (lo, hi) = tap_range(len, shift);
            if lo == hi {
                continue;
            }
            let (slo, shi) = ((lo as isize + shift) as usize, (hi as isize + shift) as usize);
            g.weight[c * k + j] += d[lo..hi].iter().zip(&inp[slo..shi]).map(|(a, b)| *a * *b).sum::<T>();
            let w = p.weight[c * k + j];
            for (o, &dv) in dx.channel_mut(c)[slo..shi].iter_mut().zip(&d[lo..hi]) {
                *o += w * dv;
            }
        }
    }
    dx
}

pub(crate) fn hnf_backward<T: Real>(
    x: &Seq<T>,
    p: &HnfParams<T>,
    cache: &HnfCache<T>,
    dy: &Seq<T>,
    g: &mut HnfParams<T>,
    need_dx: bool,
) -> Option<Seq<T>> {
    let mut dpre = conv1d_backward(&cache.act, &p.fuse, dy, &mut g.fuse, true).expect("requested");
    for (c, &nonlinear) in p.nonlinear_mask.iter().enumerate() {
        if nonlinear {
            let pre = cache.pre.channel(c).to_vec();
            for (d, z) in dpre.channel_mut(c).iter_mut().zip(pre) {
                *d *= silu_grad(z);
            }
        }
    }
    let mut dx = need_dx.then(|| Seq::zeros(x.channels(), x.len()));
    let mut off = 0;
    for (b, gb) in p.branches.iter().zip(g.branches.iter_mut()) {
        let part = dpre.slice_channels(off, off + b.out_channels);
        off += b.out_channels;
        if let Some(d) = conv1d_backward(x, b, &part, gb, need_dx) {
            let acc = dx.as_mut().expect("allocated when needed");
            for (a, v) in acc.data_mut().iter_mut().zip(d.data()) {
                *a += *v;
            }
        }
    }
    dx
}

/// `d softplus(z) / dz`, matching the forward's large-argument branch.
fn softplus_grad(z: f64) -> f64 {
    if z > 30.0 {
        1.0
    } else {
        sigmoid(z)
    }
}

pub(crate) fn mamba_backward<T: Real>(
    x: &Seq<T>,
    p: &MambaParams<T>,
    c: &MambaCache<T>,
    dout: &Seq<T>,
    g: &mut MambaParams<T>,
) -> Result<Seq<T>> {
    let len = x.len();
    let (di, h, r) = (p.d_inner, p.d_state, p.dt_rank);

    // out = out_proj(y ⊙ SiLU(z)) + x
    let mut gated = c.y.clone();
    for d in 0..di {
        let z = c.xz.channel(di + d);
        for (o, &zv) in gated.channel_mut(d).iter_mut().zip(z) {
            *o *= silu(zv);
        }
    }
    let dgated = conv1d_backward(&gated, &p.out_proj, dout, &mut g.out_proj, true).expect("requested");
    let mut dy = Seq::<T>::zeros(di, len);
    let mut dz = Seq::<T>::zeros(di, len);
    for d in 0..di {
        let z = c.xz.channel(di + d);
        let y = c.y.channel(d);
        let dg = dgated.channel(d);
        for t in 0..len {
            dy.channel_mut(d)[t] = dg[t] * silu(z[t]);
            dz.channel_mut(d)[t] = dg[t] * y[t] * silu_grad(z[t]);
        }
    }

    // Per-channel scans share B and C, so their cotangents accumulate.
    let mut du = Seq::<T>::zeros(di, len);
    let mut ddt_pre = Seq::<T>::zeros(di, len);
    let mut db_rows = vec![0.0f64; len * h];
    let mut dc_rows = vec![0.0f64; len * h];
    for d in 0..di {
        let delta = &c.delta[d * len..(d + 1) * len];
        let sel = SelectiveInputs::new(delta, &c.b_rows, &c.c_rows, h)?;
        let xd: Vec<f64> = c.u.channel(d).iter().map(|v| v.lower()).collect();
        let dyd: Vec<f64> = dy.channel(d).iter().map(|v| v.lower()).collect();
        let a = p.a_row(d);
        let sg = selective_scan_vjp(&xd, &sel, &a, &dyd)?;
        for (o, v) in du.channel_mut(d).iter_mut().zip(&sg.dx) {
            *o = T::lift(*v);
        }
        let pre = c.dt_pre.channel(d);
        for t in 0..len {
            ddt_pre.channel_mut(d)[t] = T::lift(sg.ddelta[t] * softplus_grad(pre[t].lower()));
        }
        for (acc, v) in db_rows.iter_mut().zip(&sg.db) {
            *acc += v;
        }
        for (acc, v) in dc_rows.iter_mut().zip(&sg.dc) {
            *acc += v;
        }
        // A = −exp(a_log), so dA/da_log = A.
        for i in 0..h {
            g.a_log[d * h + i] += T::lift(sg.da[i] * a[i]);
        }
    }

    let d_low = conv1d_backward(&c.dbc.slice_channels(0, r), &p.dt_proj, &ddt_pre, &mut g.dt_proj, true)
        .expect("requested");
    let mut ddbc = Seq::<T>::zeros(r + 2 * h, len);
    for k in 0..r {
        ddbc.channel_mut(k).copy_from_slice(d_low.channel(k));
    }
    for k in 0..h {
        for t in 0..len {
            ddbc.channel_mut(r + k)[t] = T::lift(db_rows[t * h + k]);
            ddbc.channel_mut(r + h + k)[t] = T::lift(dc_rows[t * h + k]);
        }
    }
    let du_proj = conv1d_backward(&c.u, &p.x_proj, &ddbc, &mut g.x_proj, true).expect("requested");
    let mut dconv_pre = du;
    for (i, (o, v)) in dconv_pre.data_mut().iter_mut().zip(du_proj.data()).enumerate() {
        *o = (*o + *v) * silu_grad(c.conv_pre.data()[i]);
    }
    let dmain = depthwise_backward(&c.xz.slice_channels(0, di), &p.conv, &dconv_pre, &mut g.conv);
    let dxz = Seq::concat_channels(&[dmain, dz])?;
    let dx_in = conv1d_backward(x, &p.in_proj, &dxz, &mut g.in_proj, true).expect("requested");
    let mut dx = dout.clone();
    for (o, v) in dx.data_mut().iter_mut().zip(dx_in.data()) {
        *o += *v;
    }
    Ok(dx)
}

fn check<T: Real>(s: &Seq<T>, op: &str) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::non_finite(op))
    }
}

/// Loss and exact gradients of `mse_loss(forward(x), target)`, with the
/// loss cotangent multiplied by `loss_scale`.
pub fn backward_scaled<T: Real>(
    x: &[T],
    target: &[T],
    params: &ModelParams<T>,
    loss_scale: f64,
) -> Result<(f64, Gradients<T>)> {
    if x.len() != target.len() {
        return Err(Error::mismatch(format!(
            "input has {} samples, target {}",
            x.len(),
            target.len()
        )));
    }
    let (pred, cache) = params.forward_cached(x)?;
    let loss = mse_loss(&pred, target)?;
    if !loss.is_finite() {
        return Err(Error::non_finite("loss"));
    }
    let n = pred.len() as f64;
    let dpred: Vec<T> = pred
        .iter()
        .zip(target)
        .map(|(p, t)| T::lift(loss_scale * 2.0 / n) * (*p - *t))
        .collect();
    let dpred = Seq::from_vec(1, pred.len(), dpred)?;

    let mut g = params.zeros_like();
    let d_lat_out = hnf_backward(&cache.latent_out, &params.hnf_out, &cache.hnf_out, &dpred, &mut g.hnf_out, true)
        .expect("requested");
    check(&d_lat_out, "output filter block backward")?;
    let d_lat_in = mamba_backward(&cache.latent_in, &params.mamba, &cache.mamba, &d_lat_out, &mut g.mamba)?;
    check(&d_lat_in, "state-space block backward")?;
    hnf_backward(&cache.input, &params.hnf_in, &cache.hnf_in, &d_lat_in, &mut g.hnf_in, false);
    let grads = Gradients::from_params(g);
    if !grads.is_finite() {
        return Err(Error::non_finite("parameter gradients"));
    }
    Ok((loss, grads))
}

pub fn backward<T: Real>(x: &[T], target: &[T], params: &ModelParams<T>) -> Result<(f64, Gradients<T>)> {
    backward_scaled(x, target, params, 1.0)
}
