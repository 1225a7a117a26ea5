//! Beat-synchronous averaging and subtraction.

use std::f64::consts::PI;

use super::peaks::RPeakList;
use crate::error::{Error, Result};
use crate::signal::Signal;

pub const DEFAULT_WINDOW_MS: f64 = 600.0;
pub const TAPER_MS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateOutcome {
    pub signal: Signal,
    /// Full windows averaged into the template.
    pub beats_used: usize,
    /// Set when too few beats were available and the input was returned as is.
    pub skipped: bool,
}

/// Raised-cosine edges of `taper` samples on a window of `len` samples.
fn taper_weights(len: usize, taper: usize) -> Vec<f64> {
    let taper = taper.min(len / 2);
    (0..len)
        .map(|j| {
            let edge = j.min(len - 1 - j);
            if edge >= taper {
                1.0
            } else {
                0.5 * (1.0 - (PI * (edge as f64 + 0.5) / taper as f64).cos())
            }
        })
        .collect()
}

/// Mean of the centred windows that fit entirely inside the signal.
pub fn beat_template(x: &[f64], peaks: &[usize], half: usize) -> (Vec<f64>, usize) {
    let len = 2 * half + 1;
    let mut tpl = vec![0.0; len];
    let mut used = 0;
    for &p in peaks {
        if p >= half && p + half < x.len() {
            for (t, v) in tpl.iter_mut().zip(&x[p - half..=p + half]) {
                *t += v;
            }
            used += 1;
        }
    }
    if used > 0 {
        tpl.iter_mut().for_each(|t| *t /= used as f64);
    }
    (tpl, used)
}

pub fn template_subtract(x: &Signal, peaks: &RPeakList, window_ms: f64) -> Result<TemplateOutcome> {
    if !(window_ms.is_finite() && window_ms > 0.0) {
        return Err(Error::invalid("template window must be positive"));
    }
    let fs = x.fs() as f64;
    let half = (window_ms * fs / 2000.0).round() as usize;
    let samples = x.samples();
    if let Some(&bad) = peaks.indices.iter().find(|&&p| p >= samples.len()) {
        return Err(Error::invalid(format!("peak index {bad} beyond signal end")));
    }
    let (tpl, used) = beat_template(samples, &peaks.indices, half);
    if peaks.len() < 2 || used == 0 {
        return Ok(TemplateOutcome {
            signal: x.clone(),
            beats_used: used,
            skipped: true,
        });
    }
    let w = taper_weights(tpl.len(), (TAPER_MS * fs / 1000.0).round() as usize);
    let mut y = samples.to_vec();
    for &p in &peaks.indices {
        for (j, (t, wj)) in tpl.iter().zip(&w).enumerate() {
            let i = p as isize - half as isize + j as isize;
            if i >= 0 && (i as usize) < y.len() {
                y[i as usize] -= wj * t;
            }
        }
    }
    Ok(TemplateOutcome {
        signal: x.with_samples(y)?,
        beats_used: used,
        skipped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taper_shape() {
        let w = taper_weights(9, 3);
        assert!(w[0] < w[1] && w[1] < w[2] && w[2] < 1.0);
        assert_eq!(w[4], 1.0);
        assert_eq!(w[0], w[8]);
    }

    #[test]
    fn too_few_beats_is_a_flagged_no_op() {
        let x = Signal::from_samples(vec![1.0; 2000], 1000).unwrap();
        let out = template_subtract(&x, &RPeakList::new(vec![1000]), 600.0).unwrap();
        assert!(out.skipped);
        assert_eq!(out.signal, x);
    }

    #[test]
    fn far_samples_untouched() {
        let x: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.01).sin()).collect();
        let s = Signal::from_samples(x.clone(), 1000).unwrap();
        let out = template_subtract(&s, &RPeakList::new(vec![1000, 2000]), 600.0).unwrap();
        let y = out.signal.samples();
        for i in (0..699).chain(1301..1699).chain(2301..4000) {
            assert_eq!(y[i].to_bits(), x[i].to_bits(), "{i}");
        }
    }
}
