//! Classical signal processing: Butterworth filters, resampling, and the two
//! baseline artifact removers (highpass filtering and template subtraction).

mod butter;
mod filter;
mod peaks;
mod resample;
mod template;

pub use butter::{design_butterworth, Biquad, BiquadCascade, FilterDesign, FilterKind, MAX_ORDER};
pub use filter::{filter_apply, filter_causal, filter_zero_phase, impulse_length, FilterMode};
pub use peaks::{detect_r_peaks, detect_r_peaks_with, PeakDetectorConfig, RPeakList};
pub use resample::{resample, Resampler, MAX_FACTOR};
pub use template::{beat_template, template_subtract, TemplateOutcome, DEFAULT_WINDOW_MS, TAPER_MS};

use crate::error::Result;
use crate::signal::Signal;

pub const HP_CUTOFF_HZ: f64 = 40.0;
pub const HP_ORDER: usize = 4;

/// Rate every stage after preprocessing works at.
pub const WORKING_FS: u32 = 1000;

/// Zero-phase Butterworth highpass.
pub fn highpass_denoise(x: &Signal, cutoff_hz: f64, order: usize) -> Result<Signal> {
    let f = design_butterworth(order, FilterKind::Highpass, &[cutoff_hz], x.fs() as f64)?;
    filter_apply(x, &f, FilterMode::ZeroPhase)
}

/// Detect beats on `x` itself and subtract the averaged beat.
pub fn ts_denoise(x: &Signal, window_ms: f64) -> Result<TemplateOutcome> {
    let peaks = detect_r_peaks(x)?;
    template_subtract(x, &peaks, window_ms)
}

/// Raw sEMG: 4th-order 20–500 Hz bandpass, then down to the working rate.
pub fn preprocess_semg(raw: &Signal) -> Result<Signal> {
    let fs = raw.fs() as f64;
    let hi = 500.0f64.min(0.45 * fs);
    let bp = design_butterworth(4, FilterKind::Bandpass, &[20.0, hi], fs)?;
    resample(&filter_apply(raw, &bp, FilterMode::ZeroPhase)?, WORKING_FS)
}

/// Raw ECG: up to the working rate first, then 3rd-order 10 Hz highpass and
/// 200 Hz lowpass. Filtering after resampling keeps the 200 Hz edge below
/// Nyquist even for low-rate sources.
pub fn preprocess_ecg(raw: &Signal) -> Result<Signal> {
    let x = resample(raw, WORKING_FS)?;
    let fs = x.fs() as f64;
    let hp = design_butterworth(3, FilterKind::Highpass, &[10.0], fs)?;
    let lp = design_butterworth(3, FilterKind::Lowpass, &[200.0], fs)?;
    filter_apply(&filter_apply(&x, &hp, FilterMode::ZeroPhase)?, &lp, FilterMode::ZeroPhase)
}
