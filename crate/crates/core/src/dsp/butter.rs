//! Butterworth IIR design as a cascade of second-order sections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandpass,
}

/// One section `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
/// First-order sections have `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Both poles strictly inside the unit circle (Jury conditions).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    pub fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + self.b1 * z_inv + self.b2 * z2) / (1.0 + self.a1 * z_inv + self.a2 * z2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub order: usize,
    pub kind: FilterKind,
    /// One cutoff for lowpass/highpass, two band edges for bandpass.
    pub cutoffs_hz: Vec<f64>,
    pub fs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    /// Scalar applied once to the input; rounding correction so the
    /// reference gain is exactly one.
    pub gain: f64,
    pub design: FilterDesign,
}

impl BiquadCascade {
    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    /// Complex response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / self.design.fs);
        self.response_at(z_inv)
    }

    fn response_at(&self, z_inv: Complex64) -> Complex64 {
        self.sections
            .iter()
            .fold(Complex64::new(self.gain, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude_db(&self, f: f64) -> f64 {
        20.0 * self.response(f).norm().log10()
    }

    /// Frequency at which the passband gain is normalized to one.
    pub fn reference_hz(&self) -> f64 {
        reference_hz(&self.design)
    }
}

fn reference_hz(d: &FilterDesign) -> f64 {
    match d.kind {
        FilterKind::Lowpass => 0.0,
        FilterKind::Highpass => d.fs / 2.0,
        FilterKind::Bandpass => {
            let w0 = (prewarp(d.cutoffs_hz[0], d.fs) * prewarp(d.cutoffs_hz[1], d.fs)).sqrt();
            d.fs / PI * (w0 / (2.0 * d.fs)).atan()
        }
    }
}

/// Analog frequency (rad/s) that the bilinear transform maps onto `f`.
fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f / fs).tan()
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    let k = 2.0 * fs;
    (k + s) / (k - s)
}

/// Left-half-plane poles of the unit-cutoff analog prototype.
fn prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

pub fn design_butterworth(order: usize, kind: FilterKind, cutoffs_hz: &[f64], fs: f64) -> Result<BiquadCascade> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::invalid(format!("filter order must be in 1..={MAX_ORDER}, got {order}")));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("sampling rate must be positive"));
    }
    let expected = if kind == FilterKind::Bandpass { 2 } else { 1 };
    if cutoffs_hz.len() != expected {
        return Err(Error::invalid(format!("{kind:?} needs {expected} cutoff(s)")));
    }
    let nyquist = fs / 2.0;
    for &f in cutoffs_hz {
        if !(f > 0.0 && f < nyquist) {
            return Err(Error::invalid(format!("cutoff {f} Hz outside (0, {nyquist}) Hz")));
        }
    }
    if kind == FilterKind::Bandpass && cutoffs_hz[0] >= cutoffs_hz[1] {
        return Err(Error::invalid("band edges must satisfy low < high"));
    }

    let proto = prototype_poles(order);
    let analog: Vec<Complex64> = match kind {
        FilterKind::Lowpass => {
            let wc = prewarp(cutoffs_hz[0], fs);
            proto.iter().map(|p| p * wc).collect()
        }
        FilterKind::Highpass => {
            let wc = prewarp(cutoffs_hz[0], fs);
            proto.iter().map(|p| wc / p).collect()
        }
        FilterKind::Bandpass => {
            let w1 = prewarp(cutoffs_hz[0], fs);
            let w2 = prewarp(cutoffs_hz[1], fs);
            let (bw, w0sq) = (w2 - w1, w1 * w2);
            proto
                .iter()
                .flat_map(|p| {
                    let pb = p * bw;
                    let root = (pb * pb - 4.0 * w0sq).sqrt();
                    [(pb + root) / 2.0, (pb - root) / 2.0]
                })
                .collect()
        }
    };
    let poles: Vec<Complex64> = analog.iter().map(|&s| bilinear(s, fs)).collect();

    let design = FilterDesign {
        order,
        kind,
        cutoffs_hz: cutoffs_hz.to_vec(),
        fs,
    };
    let ref_z_inv = Complex64::from_polar(1.0, -2.0 * PI * reference_hz(&design) / fs);

    let mut sections = Vec::new();
    for group in pair_poles(&poles) {
        let (a1, a2) = match group {
            PoleGroup::Pair(p, q) => (-(p + q).re, (p * q).re),
            PoleGroup::Single(p) => (-p, 0.0),
        };
        let second_order = matches!(group, PoleGroup::Pair(..));
        // Numerator shapes: zeros at z = −1 (lowpass), z = +1 (highpass),
        // one of each (bandpass). Written so the sums that must vanish do so exactly.
        let (n0, n1, n2) = match (kind, second_order) {
            (FilterKind::Lowpass, true) => (1.0, 2.0, 1.0),
            (FilterKind::Lowpass, false) => (1.0, 1.0, 0.0),
            (FilterKind::Highpass, true) => (1.0, -2.0, 1.0),
            (FilterKind::Highpass, false) => (1.0, -1.0, 0.0),
            (FilterKind::Bandpass, _) => (1.0, 0.0, -1.0),
        };
        let raw = Biquad {
            b0: n0,
            b1: n1,
            b2: n2,
            a1,
            a2,
        };
        let g = 1.0 / raw.response(ref_z_inv).norm();
        sections.push(Biquad {
            b0: g * n0,
            b1: g * n1,
            b2: g * n2,
            a1,
            a2,
        });
    }
    let mut cascade = BiquadCascade {
        sections,
        gain: 1.0,
        design,
    };
    cascade.gain = 1.0 / cascade.response_at(ref_z_inv).norm();
    if !cascade.is_stable() {
        return Err(Error::non_finite("filter design produced an unstable section"));
    }
    Ok(cascade)
}

enum PoleGroup {
    Pair(Complex64, Complex64),
    Single(f64),
}

/// Conjugate pairs become one section each; real poles are paired in sorted
/// order with a lone leftover becoming a first-order section.
fn pair_poles(poles: &[Complex64]) -> Vec<PoleGroup> {
    let tol = 1e-12;
    let mut groups = Vec::new();
    let mut reals = Vec::new();
    for &p in poles {
        if p.im.abs() <= tol * p.norm().max(1.0) {
            reals.push(p.re);
        } else if p.im > 0.0 {
            groups.push(PoleGroup::Pair(p, p.conj()));
        }
    }
    reals.sort_by(f64::total_cmp);
    let mut it = reals.chunks(2);
    for chunk in &mut it {
        match *chunk {
            [a, b] => groups.push(PoleGroup::Pair(Complex64::new(a, 0.0), Complex64::new(b, 0.0))),
            [a] => groups.push(PoleGroup::Single(a)),
            _ => unreachable!(),
        }
    }
    groups
}
