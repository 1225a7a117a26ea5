use crate::error::{Error, Result};
use crate::signal::Signal;

/// Clean signal, unscaled artifact, and their mixture `clean + scale·artifact`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyPair {
    pub clean: Signal,
    pub artifact: Signal,
    pub mixed: Signal,
    pub target_snr_db: f64,
    pub scale: f64,
}

impl NoisyPair {
    /// `10·log10(P_clean / P_{scale·artifact})` recomputed from the stored signals.
    pub fn measured_snr_db(&self) -> f64 {
        let noise: Vec<f64> = self
            .mixed
            .samples()
            .iter()
            .zip(self.clean.samples())
            .map(|(m, c)| m - c)
            .collect();
        let p_noise = noise.iter().map(|v| v * v).sum::<f64>();
        let p_clean = self.clean.samples().iter().map(|v| v * v).sum::<f64>();
        10.0 * (p_clean / p_noise).log10()
    }

    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }
}

/// Scale for which `clean` over `scale·artifact` has the requested SNR.
pub fn snr_scale(p_clean: f64, p_artifact: f64, snr_db: f64) -> f64 {
    (p_clean / (p_artifact * 10f64.powf(snr_db / 10.0))).sqrt()
}

pub fn mix_at_snr(clean: &Signal, artifact: &Signal, snr_db: f64) -> Result<NoisyPair> {
    if clean.fs() != artifact.fs() {
        return Err(Error::mismatch(format!(
            "clean at {} Hz, artifact at {} Hz",
            clean.fs(),
            artifact.fs()
        )));
    }
    if clean.len() != artifact.len() {
        return Err(Error::mismatch(format!(
            "clean has {} samples, artifact {}",
            clean.len(),
            artifact.len()
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("target SNR must be finite"));
    }
    let (pc, pa) = (clean.power(), artifact.power());
    if pc == 0.0 || pa == 0.0 {
        return Err(Error::invalid("cannot mix at a target SNR when either signal has zero power"));
    }
    let scale = snr_scale(pc, pa, snr_db);
    let mixed = clean
        .samples()
        .iter()
        .zip(artifact.samples())
        .map(|(c, a)| c + scale * a)
        .collect();
    Ok(NoisyPair {
        mixed: clean.with_samples(mixed)?,
        clean: clean.clone(),
        artifact: artifact.clone(),
        target_snr_db: snr_db,
        scale,
    })
}
