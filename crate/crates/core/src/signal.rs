use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a signal came from. Every field is free-form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Provenance {
    pub source: String,
    pub channel: String,
    pub subject: String,
    pub exercise: String,
    /// Index within the parent recording after segmentation.
    pub segment: Option<u64>,
}

impl Provenance {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            ..Self::default()
        }
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject = subject.into();
        self
    }
}

/// Sampled waveform with its rate in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    fs: u32,
    pub provenance: Provenance,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: u32, provenance: Provenance) -> Result<Self> {
        if fs == 0 {
            return Err(Error::invalid("sampling rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::empty("signal has no samples"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            fs,
            provenance,
        })
    }

    /// Signal without provenance, mostly for tests and synthetic work.
    pub fn from_samples(samples: Vec<f64>, fs: u32) -> Result<Self> {
        Self::new(samples, fs, Provenance::default())
    }

    /// Same rate and provenance, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.fs, self.provenance.clone())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs as f64
    }

    /// Mean square.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }
}

/// Mean of squares; NaN for an empty slice.
pub fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

pub fn rms(x: &[f64]) -> f64 {
    mean_square(x).sqrt()
}
