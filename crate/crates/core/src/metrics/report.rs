use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::features::{arv_features, mf_features};
use super::{rmse, snr_db, snr_improvement};
use crate::data::NoisyPair;
use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub arv_window_ms: f64,
    pub mf_window_ms: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            arv_window_ms: 500.0,
            mf_window_ms: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: usize,
    pub input_snr_db: f64,
    pub snr_imp_db: f64,
    pub rmse: f64,
    pub rmse_arv: f64,
    pub rmse_mf_hz: f64,
    /// The output SNR hit the cap.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Input SNR level, `None` for the grand mean.
    pub input_snr_db: Option<f64>,
    pub count: usize,
    pub snr_imp_db: f64,
    pub rmse: f64,
    pub rmse_arv: f64,
    pub rmse_mf_hz: f64,
}

impl Aggregate {
    fn of(level: Option<f64>, recs: &[&PairRecord]) -> Self {
        let n = recs.len() as f64;
        let mean = |f: fn(&PairRecord) -> f64| recs.iter().map(|r| f(r)).sum::<f64>() / n;
        Self {
            input_snr_db: level,
            count: recs.len(),
            snr_imp_db: mean(|r| r.snr_imp_db),
            rmse: mean(|r| r.rmse),
            rmse_arv: mean(|r| r.rmse_arv),
            rmse_mf_hz: mean(|r| r.rmse_mf_hz),
        }
    }
}

/// Table-style summary: one row per denoiser, metric columns in fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub denoiser: String,
    pub snr_imp_db: f64,
    pub rmse: f64,
    pub rmse_arv: f64,
    pub rmse_mf_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub denoiser: String,
    pub config: EvalConfig,
    pub records: Vec<PairRecord>,
    pub excluded: Vec<Exclusion>,
    /// Means per input SNR level, ascending.
    pub per_snr: Vec<Aggregate>,
    pub overall: Aggregate,
}

pub const CSV_HEADER: &str = "kind,index,input_snr_db,count,snr_imp_db,rmse,rmse_arv,rmse_mf_hz,capped";

impl MetricsReport {
    /// Recompute the aggregates from `records`.
    pub fn aggregate(records: &[PairRecord]) -> (Vec<Aggregate>, Aggregate) {
        let mut levels: BTreeMap<u64, (f64, Vec<&PairRecord>)> = BTreeMap::new();
        for r in records {
            // Order-preserving key for finite floats.
            let bits = r.input_snr_db.to_bits();
            let key = if r.input_snr_db < 0.0 { !bits } else { bits | (1 << 63) };
            levels.entry(key).or_insert_with(|| (r.input_snr_db, Vec::new())).1.push(r);
        }
        let per = levels.values().map(|(lvl, recs)| Aggregate::of(Some(*lvl), recs)).collect();
        let all: Vec<&PairRecord> = records.iter().collect();
        (per, Aggregate::of(None, &all))
    }

    pub fn summary(&self) -> SummaryRow {
        SummaryRow {
            denoiser: self.denoiser.clone(),
            snr_imp_db: self.overall.snr_imp_db,
            rmse: self.overall.rmse,
            rmse_arv: self.overall.rmse_arv,
            rmse_mf_hz: self.overall.rmse_mf_hz,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("metrics report", e.to_string()))
    }

    /// One row per pair, then one per SNR level and a final `overall` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "pair,{},{:?},1,{:?},{:?},{:?},{:?},{}",
                r.index, r.input_snr_db, r.snr_imp_db, r.rmse, r.rmse_arv, r.rmse_mf_hz, r.capped
            );
        }
        for a in self.per_snr.iter().chain(std::iter::once(&self.overall)) {
            let (kind, level) = match a.input_snr_db {
                Some(l) => ("snr-mean", format!("{l:?}")),
                None => ("overall", String::new()),
            };
            let _ = writeln!(
                s,
                "{kind},,{level},{},{:?},{:?},{:?},{:?},",
                a.count, a.snr_imp_db, a.rmse, a.rmse_arv, a.rmse_mf_hz
            );
        }
        s
    }
}

fn score(pair: &NoisyPair, out: &Signal, cfg: &EvalConfig, index: usize) -> Result<PairRecord> {
    if out.len() != pair.len() {
        return Err(Error::mismatch(format!(
            "denoiser returned {} samples for a {}-sample input",
            out.len(),
            pair.len()
        )));
    }
    if out.fs() != pair.clean.fs() {
        return Err(Error::mismatch(format!(
            "denoiser returned {} Hz for a {} Hz input",
            out.fs(),
            pair.clean.fs()
        )));
    }
    let (c, m, d) = (pair.clean.samples(), pair.mixed.samples(), out.samples());
    let fs = pair.clean.fs();
    let imp = snr_improvement(c, m, d)?;
    let out_snr = snr_db(c, d)?;
    let arv = rmse(
        &arv_features(c, fs, cfg.arv_window_ms)?.values,
        &arv_features(d, fs, cfg.arv_window_ms)?.values,
    )?;
    let mf = rmse(
        &mf_features(c, fs, cfg.mf_window_ms)?.values,
        &mf_features(d, fs, cfg.mf_window_ms)?.values,
    )?;
    Ok(PairRecord {
        index,
        input_snr_db: pair.target_snr_db,
        snr_imp_db: imp.db,
        rmse: rmse(c, d)?,
        rmse_arv: arv,
        rmse_mf_hz: mf,
        capped: out_snr.capped,
    })
}

/// Score `f(pair)` against every pair. A pair whose denoising or scoring
/// fails is excluded and listed with its reason; window settings that no
/// pair could satisfy abort up front.
pub fn evaluate_with(
    pairs: &[NoisyPair],
    name: &str,
    cfg: &EvalConfig,
    f: impl Fn(&NoisyPair) -> Result<Signal>,
) -> Result<MetricsReport> {
    if pairs.is_empty() {
        return Err(Error::empty("no pairs to evaluate"));
    }
    let probe = &pairs[0].clean;
    arv_features(probe.samples(), probe.fs(), cfg.arv_window_ms)?;
    mf_features(probe.samples(), probe.fs(), cfg.mf_window_ms)?;
    let mut records = Vec::with_capacity(pairs.len());
    let mut excluded = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        match f(p).and_then(|out| score(p, &out, cfg, i)) {
            Ok(r) => records.push(r),
            Err(e) => excluded.push(Exclusion {
                index: i,
                reason: e.to_string(),
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::empty(format!(
            "every pair was excluded; first reason: {}",
            excluded[0].reason
        )));
    }
    let (per_snr, overall) = MetricsReport::aggregate(&records);
    Ok(MetricsReport {
        denoiser: name.to_string(),
        config: cfg.clone(),
        records,
        excluded,
        per_snr,
        overall,
    })
}

pub fn evaluate(pairs: &[NoisyPair], denoiser: &dyn Denoiser, cfg: &EvalConfig) -> Result<MetricsReport> {
    evaluate_with(pairs, denoiser.name(), cfg, |p| denoiser.denoise(&p.mixed))
}
