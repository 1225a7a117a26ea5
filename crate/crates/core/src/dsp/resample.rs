//! Rational polyphase resampling with a Kaiser-windowed sinc.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Largest reduced interpolation or decimation factor accepted.
pub const MAX_FACTOR: u32 = 4096;
const STOPBAND_DB: f64 = 80.0;
const CUTOFF_FRACTION: f64 = 0.9;
/// Filter half-length in input-rate periods of the slower side.
const HALF_PERIODS: usize = 32;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Polyphase filter bank for an `up/down` rate change.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    half: usize,
    /// Per output phase, weights for input offsets `q_lo[p]..` (see `process`).
    phases: Vec<Vec<f64>>,
    q_lo: Vec<isize>,
}

impl Resampler {
    pub fn new(fs_in: u32, fs_out: u32) -> Result<Self> {
        if fs_in == 0 || fs_out == 0 {
            return Err(Error::invalid("sampling rates must be positive"));
        }
        let g = gcd(fs_in, fs_out);
        let (up, down) = (fs_out / g, fs_in / g);
        if up > MAX_FACTOR || down > MAX_FACTOR {
            return Err(Error::invalid(format!(
                "rate ratio {fs_out}/{fs_in} reduces to {up}/{down}, beyond the factor bound {MAX_FACTOR}"
            )));
        }
        let (up, down) = (up as usize, down as usize);
        let half = HALF_PERIODS * up.max(down);
        // Cutoff in cycles per sample of the upsampled stream.
        let fc = CUTOFF_FRACTION * 0.5 / up.max(down) as f64;
        let beta = kaiser_beta(STOPBAND_DB);
        let i0b = bessel_i0(beta);
        let tap = |d: isize| -> f64 {
            let d = d as f64;
            let r = d / half as f64;
            let win = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
            let sinc = if d == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * d).sin() / (PI * d)
            };
            sinc * win
        };
        // Output k sits at upsampled position k·down = base·up + p. Input sample
        // base − q contributes the tap at distance p + q·up.
        let half_i = half as isize;
        let up_i = up as isize;
        let mut phases = Vec::with_capacity(up);
        let mut q_lo = Vec::with_capacity(up);
        for p in 0..up_i {
            let lo = (-half_i - p).div_euclid(up_i) + isize::from((-half_i - p).rem_euclid(up_i) != 0);
            let hi = (half_i - p).div_euclid(up_i);
            let mut w: Vec<f64> = (lo..=hi).map(|q| tap(p + q * up_i)).collect();
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= sum);
            phases.push(w);
            q_lo.push(lo);
        }
        Ok(Self {
            up,
            down,
            half,
            phases,
            q_lo,
        })
    }

    pub fn ratio(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    pub fn half_length(&self) -> usize {
        self.half
    }

    /// Output length for `n` input samples: `round(n·up/down)`.
    pub fn output_len(&self, n: usize) -> usize {
        (n * self.up + self.down / 2) / self.down
    }

    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        if self.up == 1 && self.down == 1 {
            return x.to_vec();
        }
        let reach = self.half / self.up + 2;
        let pad = reach.min(n - 1);
        let ext = super::filter::odd_extend(x, pad);
        let clamp = |i: isize| -> f64 {
            let j = i + pad as isize;
            ext[j.clamp(0, ext.len() as isize - 1) as usize]
        };
        (0..self.output_len(n))
            .map(|k| {
                let pos = k * self.down;
                let (base, p) = ((pos / self.up) as isize, pos % self.up);
                let lo = self.q_lo[p];
                self.phases[p]
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * clamp(base - (lo + j as isize)))
                    .sum()
            })
            .collect()
    }
}

pub fn resample(x: &Signal, fs_out: u32) -> Result<Signal> {
    if x.fs() == fs_out {
        return Ok(x.clone());
    }
    let r = Resampler::new(x.fs(), fs_out)?;
    let y = r.process(x.samples());
    Signal::new(y, fs_out, x.provenance.clone())
}
