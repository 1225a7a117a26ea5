//! Checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MSMG"                 4 bytes magic
//! version                u32 (currently 1)
//! scalar width           u8  (4 = f32, 8 = f64)
//! config length          u32
//! config                 UTF-8 JSON of ModelConfig
//! parameter count        u64
//! parameters             little-endian floats in ModelParams::tensors() order:
//!   hnf_in.branch{i}.weight/.bias, hnf_in.fuse.weight/.bias,
//!   mamba.in_proj.weight, mamba.conv.weight, mamba.conv.bias,
//!   mamba.x_proj.weight, mamba.dt_proj.weight, mamba.dt_proj.bias,
//!   mamba.a_log, mamba.out_proj.weight,
//!   hnf_out.branch{i}.weight/.bias, hnf_out.fuse.weight/.bias
//! ```
//!
//! `save_checkpoint` also writes `<path>.json` holding the same config for
//! human inspection; it is never read back.

use std::path::{Path, PathBuf};

use super::model::{count_parameters, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::fsutil::{read_bytes, write_atomic};
use crate::real::Real;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MSMG";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<T: Real>(p: &ModelParams<T>) -> Result<Vec<u8>> {
    let config = serde_json::to_vec(&p.config)?;
    let n = count_parameters(p);
    let mut out = Vec::with_capacity(21 + config.len() + n * T::BYTES);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(T::BYTES as u8);
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for (_, t) in p.tensors() {
        for &v in t {
            v.write_le(&mut out);
        }
    }
    Ok(out)
}

fn corrupt(detail: impl Into<String>) -> Error {
    Error::format("checkpoint", detail)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt("truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn read_checkpoint<T: Real>(bytes: &[u8]) -> Result<ModelParams<T>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic, not a model checkpoint"));
    }
    let version = cur.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!(
            "unsupported format version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let width = cur.take(1)?[0] as usize;
    if width != T::BYTES {
        return Err(corrupt(format!(
            "stored scalars are {width} bytes, reader expects {}",
            T::BYTES
        )));
    }
    let config_len = cur.u32()? as usize;
    let config: ModelConfig =
        serde_json::from_slice(cur.take(config_len)?).map_err(|e| corrupt(format!("config: {e}")))?;
    let mut params = ModelParams::<T>::init(config)?;
    let n = cur.u64()? as usize;
    if n != count_parameters(&params) {
        return Err(corrupt(format!(
            "{n} stored parameters, config implies {}",
            count_parameters(&params)
        )));
    }
    let raw = cur.take(n * T::BYTES)?;
    if cur.pos != bytes.len() {
        return Err(corrupt("trailing bytes after parameters"));
    }
    let flat: Vec<T> = raw.chunks_exact(T::BYTES).map(T::read_le).collect();
    params.assign_flat(&flat)?;
    params.validate()?;
    Ok(params)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_checkpoint<T: Real>(path: &Path, p: &ModelParams<T>) -> Result<()> {
    write_atomic(path, &write_checkpoint(p)?)?;
    let mut sidecar = serde_json::to_vec_pretty(&p.config)?;
    sidecar.push(b'\n');
    write_atomic(&sidecar_path(path), &sidecar)
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<ModelParams<T>> {
    read_checkpoint(&read_bytes(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let p = ModelParams::<f32>::init(ModelConfig::tiny(5)).unwrap();
        let bytes = write_checkpoint(&p).unwrap();
        let q: ModelParams<f32> = read_checkpoint(&bytes).unwrap();
        assert_eq!(
            p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            q.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(p.config, q.config);
        assert_eq!(write_checkpoint(&q).unwrap(), bytes);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let p = ModelParams::<f32>::init(ModelConfig::tiny(5)).unwrap();
        let bytes = write_checkpoint(&p).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_checkpoint::<f32>(&bad_magic), Err(Error::Format { .. })));

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        let err = read_checkpoint::<f32>(&bad_version).unwrap_err().to_string();
        assert!(err.contains("version"), "{err}");

        assert!(read_checkpoint::<f32>(&bytes[..bytes.len() - 1]).is_err());
        assert!(read_checkpoint::<f64>(&bytes).is_err());
    }

    #[test]
    fn save_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.msmg");
        let p = ModelParams::<f32>::init(ModelConfig::tiny(1)).unwrap();
        save_checkpoint(&path, &p).unwrap();
        let side: ModelConfig =
            serde_json::from_slice(&std::fs::read(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(side, p.config);
        assert_eq!(load_checkpoint::<f32>(&path).unwrap(), p);
    }
}
