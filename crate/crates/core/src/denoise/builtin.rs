use std::path::Path;

use crate::dsp::{design_butterworth, filter_apply, ts_denoise, BiquadCascade, FilterKind, FilterMode, WORKING_FS};
use crate::error::{Error, Result};
use crate::nn::{load_checkpoint, ModelParams};
use crate::signal::Signal;

use super::Denoiser;

pub struct Identity;

impl Denoiser for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn denoise(&self, x: &Signal) -> Result<Signal> {
        Ok(x.clone())
    }
}

/// Zero-phase Butterworth highpass; designs are cached per sampling rate.
pub struct Highpass {
    cutoff_hz: f64,
    order: usize,
    label: String,
    cache: std::sync::Mutex<Option<BiquadCascade>>,
}

impl Highpass {
    pub fn new(cutoff_hz: f64, order: usize) -> Result<Self> {
        if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) || order == 0 {
            return Err(Error::invalid("highpass needs a positive cutoff and order"));
        }
        Ok(Self {
            cutoff_hz,
            order,
            label: format!("hp:cutoff={cutoff_hz},order={order}"),
            cache: std::sync::Mutex::new(None),
        })
    }
}

impl Denoiser for Highpass {
    fn name(&self) -> &str {
        &self.label
    }

    fn denoise(&self, x: &Signal) -> Result<Signal> {
        let fs = x.fs() as f64;
        let mut cache = self.cache.lock().expect("filter cache poisoned");
        let f = match cache.as_ref() {
            Some(f) if f.design.fs == fs => f.clone(),
            _ => {
                let f = design_butterworth(self.order, FilterKind::Highpass, &[self.cutoff_hz], fs)?;
                *cache = Some(f.clone());
                f
            }
        };
        drop(cache);
        filter_apply(x, &f, FilterMode::ZeroPhase)
    }
}

pub struct TemplateSubtraction {
    window_ms: f64,
    label: String,
}

impl TemplateSubtraction {
    pub fn new(window_ms: f64) -> Result<Self> {
        if !(window_ms.is_finite() && window_ms > 0.0) {
            return Err(Error::invalid("template window must be positive"));
        }
        Ok(Self {
            window_ms,
            label: format!("ts:window={window_ms}"),
        })
    }
}

impl Denoiser for TemplateSubtraction {
    fn name(&self) -> &str {
        &self.label
    }

    /// Too few detected beats leaves the input unchanged.
    fn denoise(&self, x: &Signal) -> Result<Signal> {
        Ok(ts_denoise(x, self.window_ms)?.signal)
    }
}

/// The network in single precision, applied to whole segments at the
/// working rate.
pub struct MsemgDenoiser {
    params: ModelParams<f32>,
    label: String,
}

impl MsemgDenoiser {
    pub fn new(params: ModelParams<f32>, label: impl Into<String>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            label: label.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(load_checkpoint(path)?, format!("msemg:checkpoint={}", path.display()))
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }
}

impl Denoiser for MsemgDenoiser {
    fn name(&self) -> &str {
        &self.label
    }

    fn denoise(&self, x: &Signal) -> Result<Signal> {
        if x.fs() != WORKING_FS {
            return Err(Error::invalid(format!(
                "the network expects {WORKING_FS} Hz input, got {} Hz",
                x.fs()
            )));
        }
        let input: Vec<f32> = x.samples().iter().map(|&v| v as f32).collect();
        let y = self.params.forward(&input)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("network forward pass"));
        }
        x.with_samples(y.into_iter().map(f64::from).collect())
    }
}
