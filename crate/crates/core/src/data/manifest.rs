//! Dataset manifests and pair assembly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::read_signal;
use super::mix::{mix_at_snr, NoisyPair};
use super::prep::{normalize, segment};
use crate::dsp::{preprocess_ecg, preprocess_semg, resample, WORKING_FS};
use crate::error::{Error, Result};
use crate::fsutil::{read_json, write_json};
use crate::signal::Signal;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// SNR grid `start, start + step, …` up to and including `stop`.
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + step * i as f64).collect()
}

/// Training and validation grid: −15 to −5 dB in 2 dB steps.
pub fn default_train_grid() -> Vec<f64> {
    snr_grid(-15.0, -5.0, 2.0)
}

/// Test grid: −14 to 0 dB in 2 dB steps.
pub fn default_test_grid() -> Vec<f64> {
    snr_grid(-14.0, 0.0, 2.0)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileRef {
    /// Relative paths resolve against the manifest's directory.
    pub path: String,
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub clean: Vec<FileRef>,
    pub artifacts: Vec<FileRef>,
    pub snr_grid_db: Vec<f64>,
    /// Artifact draws per clean segment and SNR level.
    #[serde(default = "one")]
    pub draws: usize,
}

fn one() -> usize {
    1
}

fn default_preprocess() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub segment_seconds: f64,
    /// Run the sEMG/ECG preprocessing chains on load. When off, files are
    /// only resampled to the working rate.
    #[serde(default = "default_preprocess")]
    pub preprocess: bool,
    pub train: SplitSpec,
    pub val: SplitSpec,
    pub test: SplitSpec,
    /// Assumptions the producer wants carried along, e.g. channel choices.
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl DatasetManifest {
    pub fn split(&self, s: Split) -> &SplitSpec {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::format(
                "manifest",
                format!(
                    "schema_version {} (expected {MANIFEST_SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if !(self.segment_seconds.is_finite() && self.segment_seconds > 0.0) {
            return Err(Error::invalid("segment_seconds must be positive"));
        }
        for s in Split::ALL {
            let spec = self.split(s);
            if spec.snr_grid_db.is_empty() || spec.snr_grid_db.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{} SNR grid must be non-empty and finite", s.name())));
            }
            if spec.draws == 0 {
                return Err(Error::invalid(format!("{} needs at least one draw", s.name())));
            }
            if !spec.clean.is_empty() && spec.artifacts.is_empty() {
                return Err(Error::invalid(format!("{} has clean files but no artifacts", s.name())));
            }
        }
        if self.train.clean.is_empty() && self.val.clean.is_empty() && self.test.clean.is_empty() {
            return Err(Error::empty("manifest lists no clean files"));
        }
        check_leakage(Split::ALL.iter().map(|&s| (s, &self.split(s).clean)))?;
        check_leakage(Split::ALL.iter().map(|&s| (s, &self.split(s).artifacts)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = read_json(path)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

fn check_leakage<'a>(lists: impl Iterator<Item = (Split, &'a Vec<FileRef>)>) -> Result<()> {
    let mut owner: BTreeMap<&str, Split> = BTreeMap::new();
    for (split, refs) in lists {
        for r in refs {
            match owner.get(r.subject.as_str()) {
                Some(&first) if first != split => {
                    return Err(Error::SplitLeakage {
                        subject: r.subject.clone(),
                        first: first.name().into(),
                        second: split.name().into(),
                    })
                }
                _ => {
                    owner.insert(&r.subject, split);
                }
            }
        }
    }
    Ok(())
}

/// Assembled pairs per split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<NoisyPair>,
    pub val: Vec<NoisyPair>,
    pub test: Vec<NoisyPair>,
}

impl Dataset {
    pub fn split(&self, s: Split) -> &[NoisyPair] {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn split_mut(&mut self, s: Split) -> &mut Vec<NoisyPair> {
        match s {
            Split::Train => &mut self.train,
            Split::Val => &mut self.val,
            Split::Test => &mut self.test,
        }
    }
}

/// Loaded (and conditioned) source material for one split.
#[derive(Debug, Clone, Default)]
pub struct SplitSources {
    /// Normalized clean segments.
    pub clean: Vec<Signal>,
    /// Normalized artifact recordings, at least one segment long.
    pub artifacts: Vec<Signal>,
}

fn resolve(base: &Path, r: &FileRef) -> PathBuf {
    let p = Path::new(&r.path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn condition(x: &Signal, preprocess: bool, chain: fn(&Signal) -> Result<Signal>) -> Result<Signal> {
    if preprocess {
        chain(x)
    } else {
        resample(x, WORKING_FS)
    }
}

/// Load, condition, segment and normalize the files of one split.
pub fn load_split(m: &DatasetManifest, split: Split, base: &Path) -> Result<SplitSources> {
    let spec = m.split(split);
    let mut out = SplitSources::default();
    for r in &spec.clean {
        let mut x = condition(&read_signal(&resolve(base, r))?, m.preprocess, preprocess_semg)?;
        x.provenance.subject.clone_from(&r.subject);
        for seg in segment(&x, m.segment_seconds)? {
            out.clean.push(normalize(&seg).0);
        }
    }
    for r in &spec.artifacts {
        let mut x = condition(&read_signal(&resolve(base, r))?, m.preprocess, preprocess_ecg)?;
        x.provenance.subject.clone_from(&r.subject);
        out.artifacts.push(normalize(&x).0);
    }
    Ok(out)
}

/// Pair every clean segment with `draws` random artifact windows at every
/// grid SNR. Loop order: segment, SNR, draw.
pub fn assemble_pairs(src: &SplitSources, grid: &[f64], draws: usize, rng: &mut ChaCha8Rng) -> Result<Vec<NoisyPair>> {
    if src.clean.is_empty() {
        return Ok(Vec::new());
    }
    if src.artifacts.is_empty() {
        return Err(Error::empty("no artifact recordings to draw from"));
    }
    let mut pairs = Vec::with_capacity(src.clean.len() * grid.len() * draws);
    for clean in &src.clean {
        let n = clean.len();
        if let Some(short) = src.artifacts.iter().find(|a| a.len() < n || a.fs() != clean.fs()) {
            return Err(Error::mismatch(format!(
                "artifact from `{}` ({} samples at {} Hz) cannot cover a {n}-sample segment at {} Hz",
                short.provenance.subject,
                short.len(),
                short.fs(),
                clean.fs()
            )));
        }
        for &snr in grid {
            for _ in 0..draws {
                let a = &src.artifacts[rng.random_range(0..src.artifacts.len())];
                let off = rng.random_range(0..=a.len() - n);
                let window = a.with_samples(a.samples()[off..off + n].to_vec())?;
                pairs.push(mix_at_snr(clean, &window, snr)?);
            }
        }
    }
    Ok(pairs)
}

/// Deterministic per-split generator derived from the manifest seed.
pub fn split_rng(seed: u64, split: Split) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(split as u64 + 1);
    rng
}

/// Validate, load every split and assemble its pairs.
pub fn build_dataset(m: &DatasetManifest, base: &Path) -> Result<Dataset> {
    m.validate()?;
    let mut ds = Dataset::default();
    for s in Split::ALL {
        let spec = m.split(s);
        let src = load_split(m, s, base)?;
        *ds.split_mut(s) = assemble_pairs(&src, &spec.snr_grid_db, spec.draws, &mut split_rng(m.seed, s))?;
    }
    Ok(ds)
}
