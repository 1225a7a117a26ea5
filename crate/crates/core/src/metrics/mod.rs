//! Evaluation measures: SNR improvement, waveform RMSE, and RMSE between
//! windowed ARV and mean-frequency feature vectors.

mod features;
mod report;

pub use features::{arv_features, mf_features, FeatureVector, MIN_MF_WINDOW};
pub use report::{evaluate, evaluate_with, Aggregate, EvalConfig, Exclusion, MetricsReport, PairRecord, SummaryRow};

use crate::error::{Error, Result};

/// Reported in place of +∞ when the residual is exactly zero.
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr {
    pub db: f64,
    /// The value hit the cap.
    pub capped: bool,
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::mismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::empty("metric over zero samples"));
    }
    Ok(())
}

/// `10·log10(Σ ref² / Σ (est − ref)²)`, capped at [`SNR_CAP_DB`].
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> Result<Snr> {
    check_lengths(reference, estimate)?;
    let p_ref: f64 = reference.iter().map(|v| v * v).sum();
    if p_ref == 0.0 {
        return Err(Error::invalid("reference has zero power"));
    }
    let p_err: f64 = reference.iter().zip(estimate).map(|(r, e)| (e - r) * (e - r)).sum();
    let db = 10.0 * (p_ref / p_err).log10();
    Ok(if db >= SNR_CAP_DB {
        Snr {
            db: SNR_CAP_DB,
            capped: true,
        }
    } else {
        Snr { db, capped: false }
    })
}

/// Output SNR minus input SNR, both against `clean`.
pub fn snr_improvement(clean: &[f64], mixed: &[f64], denoised: &[f64]) -> Result<Snr> {
    let out = snr_db(clean, denoised)?;
    let inp = snr_db(clean, mixed)?;
    Ok(Snr {
        db: out.db - inp.db,
        capped: out.capped || inp.capped,
    })
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok((a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_cases() {
        let r = [1.0, -1.0, 1.0, -1.0];
        let e = [2.0, -2.0, 2.0, -2.0];
        assert_eq!(snr_db(&r, &e).unwrap(), Snr { db: 0.0, capped: false });
        assert_eq!(snr_db(&r, &r).unwrap(), Snr { db: SNR_CAP_DB, capped: true });
        assert!(snr_db(&[0.0; 4], &r).is_err());
        assert!(snr_db(&r, &r[..3]).is_err());
    }

    #[test]
    fn improvement_of_identity_is_zero() {
        let c = [0.3, -0.2, 0.9];
        let m = [1.3, 0.1, 0.4];
        assert_eq!(snr_improvement(&c, &m, &m).unwrap().db, 0.0);
        let oracle = snr_improvement(&c, &m, &c).unwrap();
        assert!(oracle.capped);
        assert_eq!(oracle.db, SNR_CAP_DB - snr_db(&c, &m).unwrap().db);
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 2.0], &[1.5, 2.5]).unwrap(), 0.5);
    }
}
