//! Materialized noisy pairs on disk, addressed through a JSON index.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{read_signal, write_signal};
use super::manifest::{Dataset, Split};
use super::mix::NoisyPair;
use crate::error::{Error, Result};
use crate::fsutil::{read_json, write_json};

pub const PAIR_INDEX_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub split: Split,
    pub index: usize,
    /// Paths relative to the index file.
    pub clean: String,
    pub artifact: String,
    pub mixed: String,
    pub target_snr_db: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairIndex {
    pub schema_version: u32,
    pub seed: u64,
    pub entries: Vec<PairEntry>,
}

impl PairIndex {
    pub fn load(path: &Path) -> Result<Self> {
        let idx: Self = read_json(path)?;
        if idx.schema_version != PAIR_INDEX_SCHEMA_VERSION {
            return Err(Error::format(
                "pair index",
                format!("unsupported schema version {}", idx.schema_version),
            ));
        }
        Ok(idx)
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }
}

/// Write every pair of `ds` below `dir` and the index at `dir/pairs.json`.
pub fn write_pairs(ds: &Dataset, seed: u64, dir: &Path) -> Result<PairIndex> {
    let mut entries = Vec::new();
    for split in Split::ALL {
        for (i, p) in ds.split(split).iter().enumerate() {
            let stem = format!("{}/{i:05}", split.name());
            let rel = |kind: &str| format!("{stem}_{kind}.msg");
            write_signal(&dir.join(rel("clean")), &p.clean)?;
            write_signal(&dir.join(rel("artifact")), &p.artifact)?;
            write_signal(&dir.join(rel("mixed")), &p.mixed)?;
            entries.push(PairEntry {
                split,
                index: i,
                clean: rel("clean"),
                artifact: rel("artifact"),
                mixed: rel("mixed"),
                target_snr_db: p.target_snr_db,
                scale: p.scale,
            });
        }
    }
    let idx = PairIndex {
        schema_version: PAIR_INDEX_SCHEMA_VERSION,
        seed,
        entries,
    };
    write_json(&dir.join("pairs.json"), &idx)?;
    Ok(idx)
}

/// Load the pairs of one split (or all splits); every missing file is named
/// in the error.
pub fn read_pairs(index_path: &Path, split: Option<Split>) -> Result<Vec<NoisyPair>> {
    let idx = PairIndex::load(index_path)?;
    let base = index_path.parent().unwrap_or(Path::new("."));
    let chosen: Vec<&PairEntry> = idx.entries.iter().filter(|e| split.is_none_or(|s| e.split == s)).collect();
    let missing: Vec<PathBuf> = chosen
        .iter()
        .flat_map(|e| [&e.clean, &e.artifact, &e.mixed])
        .map(|p| base.join(p))
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
        return Err(Error::Io {
            path: missing[0].clone(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} missing file(s): {}", list.len(), list.join(", ")),
            ),
        });
    }
    chosen
        .into_iter()
        .map(|e| {
            Ok(NoisyPair {
                clean: read_signal(&base.join(&e.clean))?,
                artifact: read_signal(&base.join(&e.artifact))?,
                mixed: read_signal(&base.join(&e.mixed))?,
                target_snr_db: e.target_snr_db,
                scale: e.scale,
            })
        })
        .collect()
}
