use serde::{Deserialize, Serialize};

use super::butter::BiquadCascade;
use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    Causal,
    ZeroPhase,
}

/// Threshold below which the impulse response counts as decayed.
const IMPULSE_FLOOR: f64 = 1e-6;
const IMPULSE_CAP: usize = 1 << 20;

/// Cascaded direct-form-II-transposed sections, zero initial state.
pub fn filter_causal(x: &[f64], f: &BiquadCascade) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().map(|v| v * f.gain).collect();
    for s in &f.sections {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let xin = *v;
            let out = s.b0 * xin + z1;
            z1 = s.b1 * xin - s.a1 * out + z2;
            z2 = s.b2 * xin - s.a2 * out;
            *v = out;
        }
    }
    y
}

/// Number of samples until the impulse response stays below 1e−6.
pub fn impulse_length(f: &BiquadCascade) -> usize {
    let mut len = 64;
    loop {
        let mut imp = vec![0.0; len];
        imp[0] = 1.0;
        let h = filter_causal(&imp, f);
        let last = h.iter().rposition(|v| v.abs() >= IMPULSE_FLOOR).map_or(0, |i| i + 1);
        // The tail must have been observed for at least as long as the response itself.
        if last * 2 <= len || len >= IMPULSE_CAP {
            return last.max(1);
        }
        len *= 2;
    }
}

/// Extend by odd reflection about both end samples.
pub(crate) fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let pad = pad.min(n.saturating_sub(1));
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    out.extend_from_slice(x);
    out.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
    out
}

/// Forward then backward pass over an odd-reflected copy; no phase shift.
pub fn filter_zero_phase(x: &[f64], f: &BiquadCascade) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = (3 * impulse_length(f)).min(n - 1);
    let ext = odd_extend(x, pad);
    let mut y = filter_causal(&ext, f);
    y.reverse();
    let mut y = filter_causal(&y, f);
    y.reverse();
    y[pad..pad + n].to_vec()
}

pub fn filter_apply(x: &Signal, f: &BiquadCascade, mode: FilterMode) -> Result<Signal> {
    if (x.fs() as f64 - f.design.fs).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "signal sampled at {} Hz, filter designed for {} Hz",
            x.fs(),
            f.design.fs
        )));
    }
    let y = match mode {
        FilterMode::Causal => filter_causal(x.samples(), f),
        FilterMode::ZeroPhase => filter_zero_phase(x.samples(), f),
    };
    x.with_samples(y)
}
