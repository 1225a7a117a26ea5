//! QRS detection: band-limit, square, integrate, adaptive threshold.

use serde::{Deserialize, Serialize};

use super::butter::{design_butterworth, FilterKind};
use super::filter::filter_zero_phase;
use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakDetectorConfig {
    pub band_hz: (f64, f64),
    pub band_order: usize,
    pub integration_ms: f64,
    /// Window of the running median that tracks the background level.
    pub median_window_ms: f64,
    pub median_factor: f64,
    /// Window of the running maximum that tracks beat energy.
    pub max_window_ms: f64,
    pub max_fraction: f64,
    pub refractory_ms: f64,
    pub refine_ms: f64,
}

impl Default for PeakDetectorConfig {
    fn default() -> Self {
        Self {
            band_hz: (5.0, 15.0),
            band_order: 2,
            integration_ms: 150.0,
            median_window_ms: 2000.0,
            median_factor: 3.0,
            max_window_ms: 2000.0,
            max_fraction: 0.3,
            refractory_ms: 200.0,
            refine_ms: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RPeakList {
    pub indices: Vec<usize>,
    /// Mean spacing of consecutive peaks in samples, zero with fewer than two.
    pub mean_period: f64,
}

impl RPeakList {
    pub fn new(indices: Vec<usize>) -> Self {
        let mean_period = match (indices.first(), indices.last()) {
            (Some(&a), Some(&b)) if indices.len() > 1 => (b - a) as f64 / (indices.len() - 1) as f64,
            _ => 0.0,
        };
        Self { indices, mean_period }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn detect_r_peaks(x: &Signal) -> Result<RPeakList> {
    detect_r_peaks_with(x, &PeakDetectorConfig::default())
}

fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round().max(1.0) as usize
}

/// Centered moving average of odd width `w` (shrinks at the edges).
fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let half = w / 2;
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(half), (i + half + 1).min(n));
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Centered running statistic evaluated on a coarse grid and held between grid points.
fn blockwise(x: &[f64], window: usize, hop: usize, stat: impl Fn(&mut [f64]) -> f64) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    let mut out = vec![0.0; n];
    let mut buf = Vec::with_capacity(window + 1);
    let mut start = 0;
    while start < n {
        let centre = (start + hop / 2).min(n - 1);
        let (lo, hi) = (centre.saturating_sub(half), (centre + half + 1).min(n));
        buf.clear();
        buf.extend_from_slice(&x[lo..hi]);
        let v = stat(&mut buf);
        let end = (start + hop).min(n);
        out[start..end].fill(v);
        start = end;
    }
    out
}

fn median(buf: &mut [f64]) -> f64 {
    let mid = buf.len() / 2;
    *buf.select_nth_unstable_by(mid, f64::total_cmp).1
}

fn maximum(buf: &mut [f64]) -> f64 {
    buf.iter().copied().fold(0.0, f64::max)
}

fn argmax_abs(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi).fold(lo, |best, i| if x[i].abs() > x[best].abs() { i } else { best })
}

/// Keep the candidate with the larger score when two fall within `gap` samples.
fn enforce_refractory(cands: Vec<(usize, f64)>, gap: usize) -> Vec<(usize, f64)> {
    let mut kept: Vec<(usize, f64)> = Vec::with_capacity(cands.len());
    for c in cands {
        match kept.last_mut() {
            Some(last) if c.0 - last.0 < gap => {
                if c.1 > last.1 {
                    *last = c;
                }
            }
            _ => kept.push(c),
        }
    }
    kept
}

pub fn detect_r_peaks_with(x: &Signal, cfg: &PeakDetectorConfig) -> Result<RPeakList> {
    let fs = x.fs() as f64;
    if fs < 100.0 {
        return Err(Error::invalid(format!("peak detection needs fs ≥ 100 Hz, got {fs}")));
    }
    if x.duration_s() < 2.0 {
        return Err(Error::invalid(format!(
            "peak detection needs at least 2 s of signal, got {:.3} s",
            x.duration_s()
        )));
    }
    let band = design_butterworth(cfg.band_order, FilterKind::Bandpass, &[cfg.band_hz.0, cfg.band_hz.1], fs)?;
    let bp = filter_zero_phase(x.samples(), &band);
    let sq: Vec<f64> = bp.iter().map(|v| v * v).collect();
    let integ = moving_average(&sq, ms_to_samples(cfg.integration_ms, fs) | 1);

    let hop = ms_to_samples(100.0, fs);
    let med = blockwise(&integ, ms_to_samples(cfg.median_window_ms, fs), hop, median);
    let mx = blockwise(&integ, ms_to_samples(cfg.max_window_ms, fs), hop, maximum);
    let thr: Vec<f64> = med
        .iter()
        .zip(&mx)
        .map(|(m, x)| (cfg.median_factor * m).max(cfg.max_fraction * x))
        .collect();

    // One candidate per contiguous run above threshold: the run's integrated maximum.
    let mut cands = Vec::new();
    let mut run: Option<usize> = None;
    for i in 0..=integ.len() {
        let above = i < integ.len() && thr[i] > 0.0 && integ[i] > thr[i];
        match (above, run) {
            (true, None) => run = Some(i),
            (false, Some(s)) => {
                let best = (s..i).fold(s, |b, j| if integ[j] > integ[b] { j } else { b });
                cands.push((best, integ[best]));
                run = None;
            }
            _ => {}
        }
    }
    let refractory = ms_to_samples(cfg.refractory_ms, fs);
    let cands = enforce_refractory(cands, refractory);

    let reach = ms_to_samples(cfg.refine_ms, fs);
    let refined: Vec<(usize, f64)> = cands
        .into_iter()
        .map(|(i, _)| {
            let j = argmax_abs(&bp, i.saturating_sub(reach), (i + reach + 1).min(bp.len()));
            (j, bp[j].abs())
        })
        .collect();
    let peaks = enforce_refractory(refined, refractory);
    Ok(RPeakList::new(peaks.into_iter().map(|(i, _)| i).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_signal_has_no_peaks() {
        let x = Signal::from_samples(vec![0.0; 3000], 1000).unwrap();
        assert!(detect_r_peaks(&x).unwrap().is_empty());
    }

    #[test]
    fn short_or_slow_input_is_rejected() {
        assert!(detect_r_peaks(&Signal::from_samples(vec![0.0; 1500], 1000).unwrap()).is_err());
        assert!(detect_r_peaks(&Signal::from_samples(vec![0.0; 500], 50).unwrap()).is_err());
    }

    #[test]
    fn spike_train_is_found() {
        let fs = 1000;
        let planted: Vec<usize> = (0..8).map(|k| 400 + k * 800).collect();
        let x: Vec<f64> = (0..7000)
            .map(|i| {
                planted
                    .iter()
                    .map(|&p| (-((i as f64 - p as f64) / 8.0).powi(2)).exp())
                    .sum()
            })
            .collect();
        let peaks = detect_r_peaks(&Signal::from_samples(x, fs).unwrap()).unwrap();
        assert_eq!(peaks.len(), planted.len());
        for (a, b) in peaks.indices.iter().zip(&planted) {
            assert!(a.abs_diff(*b) <= 10, "{a} vs {b}");
        }
        assert!((peaks.mean_period - 800.0).abs() < 5.0);
    }

    #[test]
    fn helpers() {
        assert_eq!(moving_average(&[0.0, 3.0, 0.0], 3), vec![1.5, 1.0, 1.5]);
        let k = enforce_refractory(vec![(0, 1.0), (5, 2.0), (20, 0.5)], 10);
        assert_eq!(k, vec![(5, 2.0), (20, 0.5)]);
    }
}
