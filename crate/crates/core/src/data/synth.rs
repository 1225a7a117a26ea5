//! Seeded surrogate sEMG and ECG generators and synthetic corpora.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::io::write_signal;
use super::manifest::{
    assemble_pairs, default_test_grid, default_train_grid, split_rng, Dataset, DatasetManifest, FileRef, Split,
    SplitSources, SplitSpec, MANIFEST_SCHEMA_VERSION,
};
use super::prep::normalize;
use crate::dsp::{design_butterworth, filter_zero_phase, preprocess_ecg, preprocess_semg, FilterKind, WORKING_FS};
use crate::error::{Error, Result};
use crate::signal::{Provenance, Signal};

/// Rate of raw synthetic sEMG before preprocessing.
pub const RAW_SEMG_FS: u32 = 2000;

fn sample_count(duration_s: f64, fs: u32) -> Result<usize> {
    let n = (duration_s * fs as f64).floor();
    if !(n >= 1.0) {
        return Err(Error::invalid(format!("{duration_s} s at {fs} Hz holds no samples")));
    }
    Ok(n as usize)
}

/// Band-limited Gaussian noise (20–150 Hz) under a slowly varying burst
/// envelope, scaled to unit peak.
pub fn synth_semg(duration_s: f64, fs: u32, seed: u64) -> Result<Signal> {
    let n = sample_count(duration_s, fs)?;
    let fsf = fs as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let hi = 150.0f64.min(0.45 * fsf);
    if hi <= 20.0 {
        return Err(Error::invalid(format!("{fs} Hz is too slow for a 20–150 Hz surrogate")));
    }
    let band = design_butterworth(4, FilterKind::Bandpass, &[20.0, hi], fsf)?;
    let x = filter_zero_phase(&noise, &band);

    let mut env = vec![0.0; n];
    let mut t = 0;
    while t < n {
        let len = ((rng.random_range(0.5..2.0) * fsf) as usize).max(1);
        let level = rng.random_range(0.2..1.0);
        let end = (t + len).min(n);
        env[t..end].fill(level);
        t = end;
    }
    let smooth = design_butterworth(2, FilterKind::Lowpass, &[3.0f64.min(0.45 * fsf)], fsf)?;
    let env = filter_zero_phase(&env, &smooth);

    let y: Vec<f64> = x.iter().zip(&env).map(|(v, e)| v * e.abs()).collect();
    let s = Signal::new(y, fs, Provenance::new("synthetic-semg"))?;
    Ok(normalize(&s).0)
}

/// One Gaussian component of the beat: offset from the R peak (s), width (s), amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub offset_s: f64,
    pub sigma_s: f64,
    pub amplitude: f64,
}

const fn wave(offset_s: f64, sigma_s: f64, amplitude: f64) -> Wave {
    Wave {
        offset_s,
        sigma_s,
        amplitude,
    }
}

/// P, Q, R, S, T. Every component is negligible beyond ±0.29 s of the R peak.
pub const BEAT: [Wave; 5] = [
    wave(-0.150, 0.020, 0.12),
    wave(-0.025, 0.008, -0.15),
    wave(0.0, 0.008, 1.0),
    wave(0.025, 0.008, -0.25),
    wave(0.180, 0.025, 0.30),
];

/// Support of a beat on either side of its R peak.
const BEAT_REACH_S: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcgJitter {
    /// Relative beat-to-beat period jitter (uniform ±).
    pub period: f64,
    /// Relative per-beat amplitude jitter (uniform ±).
    pub amplitude: f64,
}

impl Default for EcgJitter {
    fn default() -> Self {
        Self {
            period: 0.03,
            amplitude: 0.10,
        }
    }
}

impl EcgJitter {
    pub const NONE: EcgJitter = EcgJitter {
        period: 0.0,
        amplitude: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEcg {
    pub signal: Signal,
    /// Sample index of every R peak inside the signal.
    pub planted_peaks: Vec<usize>,
}

pub fn synth_ecg(duration_s: f64, fs: u32, bpm: f64, seed: u64) -> Result<SyntheticEcg> {
    synth_ecg_with(duration_s, fs, bpm, seed, EcgJitter::default())
}

pub fn synth_ecg_with(duration_s: f64, fs: u32, bpm: f64, seed: u64, jitter: EcgJitter) -> Result<SyntheticEcg> {
    if !(30.0..=180.0).contains(&bpm) {
        return Err(Error::invalid(format!("heart rate {bpm} bpm outside 30–180")));
    }
    let n = sample_count(duration_s, fs)?;
    let fsf = fs as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = 60.0 / bpm;
    let mut y = vec![0.0; n];
    let mut planted = Vec::new();
    let mut tb = rng.random_range(0.0..period);
    let jit = |rng: &mut ChaCha8Rng, w: f64| if w > 0.0 { rng.random_range(-w..w) } else { 0.0 };
    while tb < duration_s + BEAT_REACH_S {
        let amp = 1.0 + jit(&mut rng, jitter.amplitude);
        let lo = ((tb - BEAT_REACH_S) * fsf).ceil().max(0.0) as usize;
        let hi = (((tb + BEAT_REACH_S) * fsf).floor() as usize + 1).min(n);
        for (i, v) in y.iter_mut().enumerate().take(hi).skip(lo) {
            let t = i as f64 / fsf - tb;
            *v += amp
                * BEAT
                    .iter()
                    .map(|w| w.amplitude * (-0.5 * ((t - w.offset_s) / w.sigma_s).powi(2)).exp())
                    .sum::<f64>();
        }
        let idx = (tb * fsf).round() as usize;
        if idx < n {
            planted.push(idx);
        }
        tb += period * (1.0 + jit(&mut rng, jitter.period));
    }
    Ok(SyntheticEcg {
        signal: Signal::new(y, fs, Provenance::new("synthetic-ecg"))?,
        planted_peaks: planted,
    })
}

/// Split sizes for `count` subjects: 15% validation and 15% test (at least
/// one each from three subjects up), the rest training.
pub fn split_counts(count: usize) -> [usize; 3] {
    if count < 3 {
        return [count, 0, 0];
    }
    let held = ((count as f64 * 0.15).round() as usize).max(1);
    [count - 2 * held, held, held]
}

/// Parameters of an on-disk synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthCorpusConfig {
    /// Number of sEMG recordings and of ECG recordings.
    pub count: usize,
    pub duration_s: f64,
    /// Rate of the raw sEMG files; ECG files are written at the working rate.
    pub fs: u32,
    pub segment_seconds: f64,
    pub seed: u64,
}

impl Default for SynthCorpusConfig {
    fn default() -> Self {
        Self {
            count: 10,
            duration_s: 10.0,
            fs: RAW_SEMG_FS,
            segment_seconds: 2.0,
            seed: 0,
        }
    }
}

fn draw_bpm(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(50.0..100.0)
}

/// Write `count` sEMG and `count` ECG files plus `manifest.json` under `out`.
pub fn write_synthetic_corpus(cfg: &SynthCorpusConfig, out: &Path) -> Result<DatasetManifest> {
    if cfg.count == 0 {
        return Err(Error::invalid("corpus count must be positive"));
    }
    if cfg.duration_s < cfg.segment_seconds {
        return Err(Error::invalid("recordings must be at least one segment long"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let [n_train, n_val, _] = split_counts(cfg.count);
    let split_of = |i: usize| {
        if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        }
    };
    let mut refs: [(Vec<FileRef>, Vec<FileRef>); 3] = Default::default();
    for i in 0..cfg.count {
        let subject = format!("s{i:03}");
        let mut emg = synth_semg(cfg.duration_s, cfg.fs, rng.random())?;
        emg.provenance = Provenance::new("synthetic-semg").with_subject(&subject);
        let path = format!("semg/semg_{i:03}.msg");
        write_signal(&out.join(&path), &emg)?;
        refs[split_of(i) as usize].0.push(FileRef { path, subject });

        let subject = format!("e{i:03}");
        let bpm = draw_bpm(&mut rng);
        let mut ecg = synth_ecg(cfg.duration_s, WORKING_FS, bpm, rng.random())?.signal;
        ecg.provenance = Provenance::new("synthetic-ecg").with_subject(&subject);
        let path = format!("ecg/ecg_{i:03}.msg");
        write_signal(&out.join(&path), &ecg)?;
        refs[split_of(i) as usize].1.push(FileRef { path, subject });
    }
    let [train, val, test] = refs;
    let spec = |(clean, artifacts): (Vec<FileRef>, Vec<FileRef>), grid: Vec<f64>| SplitSpec {
        clean,
        artifacts,
        snr_grid_db: grid,
        draws: 1,
    };
    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        seed: cfg.seed,
        segment_seconds: cfg.segment_seconds,
        preprocess: true,
        train: spec(train, default_train_grid()),
        val: spec(val, default_train_grid()),
        test: spec(test, default_test_grid()),
        notes: vec!["synthetic surrogate corpus".into()],
    };
    manifest.validate()?;
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}

/// In-memory synthetic dataset: per split, `clean` sEMG segments (raw at
/// 2 kHz, preprocessed to the working rate) paired with windows of `ecg`
/// preprocessed ECG recordings at every SNR of the split's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthDatasetConfig {
    pub clean: [usize; 3],
    pub ecg: [usize; 3],
    pub segment_seconds: f64,
    pub ecg_seconds: f64,
    pub grids: [Vec<f64>; 3],
    pub seed: u64,
}

impl Default for SynthDatasetConfig {
    fn default() -> Self {
        Self {
            clean: [200, 20, 50],
            ecg: [20, 5, 5],
            segment_seconds: 2.0,
            ecg_seconds: 12.0,
            grids: [vec![-10.0], vec![-10.0], vec![-10.0]],
            seed: 0,
        }
    }
}

pub fn synthetic_sources(cfg: &SynthDatasetConfig, split: Split) -> Result<SplitSources> {
    let k = split as usize;
    let mut rng = split_rng(cfg.seed ^ 0x5eed_c0de, split);
    let mut src = SplitSources::default();
    for i in 0..cfg.clean[k] {
        let raw = synth_semg(cfg.segment_seconds, RAW_SEMG_FS, rng.random())?;
        let mut s = normalize(&preprocess_semg(&raw)?).0;
        s.provenance = Provenance::new("synthetic-semg").with_subject(format!("{}-s{i:03}", split.name()));
        src.clean.push(s);
    }
    for i in 0..cfg.ecg[k] {
        let bpm = draw_bpm(&mut rng);
        let raw = synth_ecg(cfg.ecg_seconds, WORKING_FS, bpm, rng.random())?.signal;
        let mut e = normalize(&preprocess_ecg(&raw)?).0;
        e.provenance = Provenance::new("synthetic-ecg").with_subject(format!("{}-e{i:03}", split.name()));
        src.artifacts.push(e);
    }
    Ok(src)
}

pub fn synthetic_dataset(cfg: &SynthDatasetConfig) -> Result<Dataset> {
    let mut ds = Dataset::default();
    for s in Split::ALL {
        let src = synthetic_sources(cfg, s)?;
        *ds.split_mut(s) = assemble_pairs(&src, &cfg.grids[s as usize], 1, &mut split_rng(cfg.seed, s))?;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semg_is_seeded_and_centred() {
        let a = synth_semg(2.0, 1000, 4).unwrap();
        let b = synth_semg(2.0, 1000, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_semg(2.0, 1000, 5).unwrap());
        let mean = a.samples().iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 0.01);
        let peak = a.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(peak, 1.0);
    }

    #[test]
    fn ecg_beat_count_and_peaks() {
        let e = synth_ecg(10.0, 1000, 60.0, 1).unwrap();
        assert!((9..=11).contains(&e.planted_peaks.len()));
        assert!(e.planted_peaks.windows(2).all(|w| w[0] < w[1]));
        assert!(synth_ecg(10.0, 1000, 20.0, 1).is_err());
    }

    #[test]
    fn split_sizes() {
        assert_eq!(split_counts(10), [6, 2, 2]);
        assert_eq!(split_counts(3), [1, 1, 1]);
        assert_eq!(split_counts(2), [2, 0, 0]);
    }
}
