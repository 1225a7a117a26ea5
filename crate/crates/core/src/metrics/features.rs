use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest window accepted for mean-frequency features, in samples.
pub const MIN_MF_WINDOW: usize = 64;

/// One value per non-overlapping window; a trailing partial window is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub window_ms: f64,
}

fn window_samples(fs: u32, window_ms: f64) -> Result<usize> {
    let w = (window_ms * fs as f64 / 1000.0).round();
    if !(w >= 1.0) {
        return Err(Error::invalid(format!("a {window_ms} ms window holds no samples at {fs} Hz")));
    }
    Ok(w as usize)
}

/// Average rectified value per window.
pub fn arv_features(x: &[f64], fs: u32, window_ms: f64) -> Result<FeatureVector> {
    let w = window_samples(fs, window_ms)?;
    let values = x
        .chunks_exact(w)
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>() / w as f64)
        .collect();
    Ok(FeatureVector { values, window_ms })
}

/// Power-spectrum centroid per window (Hamming window, zero-padded to a
/// power of two, DC bin excluded). A silent window reports 0 Hz.
pub fn mf_features(x: &[f64], fs: u32, window_ms: f64) -> Result<FeatureVector> {
    let w = window_samples(fs, window_ms)?;
    if w < MIN_MF_WINDOW {
        return Err(Error::invalid(format!(
            "mean-frequency windows need ≥ {MIN_MF_WINDOW} samples, got {w}"
        )));
    }
    let nfft = w.next_power_of_two();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let hamming: Vec<f64> = (0..w)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (w - 1) as f64).cos())
        .collect();
    let bin_hz = fs as f64 / nfft as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let values = x
        .chunks_exact(w)
        .map(|chunk| {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for ((b, v), h) in buf.iter_mut().zip(chunk).zip(&hamming) {
                b.re = v * h;
            }
            fft.process(&mut buf);
            let (mut num, mut den) = (0.0, 0.0);
            for (k, c) in buf.iter().enumerate().take(nfft / 2 + 1).skip(1) {
                let p = c.norm_sqr();
                num += k as f64 * bin_hz * p;
                den += p;
            }
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        })
        .collect();
    Ok(FeatureVector { values, window_ms })
}
