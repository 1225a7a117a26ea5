//! Canonical signal files.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! "MSG1"            magic
//! version           u8 (1)
//! fs                u32, Hz
//! count             u64
//! samples           count × f64
//! provenance_len    u32
//! provenance        UTF-8 JSON object
//! ```
//!
//! A CSV form (first line `fs`, then one sample per line) is accepted for
//! debugging; it carries no provenance.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::{read_bytes, write_atomic};
use crate::signal::{Provenance, Signal};

pub const SIGNAL_MAGIC: &[u8; 4] = b"MSG1";
pub const SIGNAL_VERSION: u8 = 1;

pub fn encode_signal(x: &Signal) -> Result<Vec<u8>> {
    let prov = serde_json::to_vec(&x.provenance)?;
    let mut out = Vec::with_capacity(4 + 1 + 4 + 8 + 8 * x.len() + 4 + prov.len());
    out.extend_from_slice(SIGNAL_MAGIC);
    out.push(SIGNAL_VERSION);
    out.extend_from_slice(&x.fs().to_le_bytes());
    out.extend_from_slice(&(x.len() as u64).to_le_bytes());
    for v in x.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(prov.len() as u32).to_le_bytes());
    out.extend_from_slice(&prov);
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    let end = pos
        .checked_add(n)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::format("signal file", "truncated"))?;
    let s = &bytes[*pos..end];
    *pos = end;
    Ok(s)
}

pub fn decode_signal(bytes: &[u8]) -> Result<Signal> {
    let bad = |d: String| Error::format("signal file", d);
    let mut pos = 0;
    if take(bytes, &mut pos, 4)? != SIGNAL_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = take(bytes, &mut pos, 1)?[0];
    if version != SIGNAL_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let fs = u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().expect("4 bytes"));
    let count = u64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().expect("8 bytes"));
    let count = usize::try_from(count).map_err(|_| bad("sample count overflows".into()))?;
    let raw = take(bytes, &mut pos, count.checked_mul(8).ok_or_else(|| bad("sample count overflows".into()))?)?;
    let samples = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let plen = u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().expect("4 bytes")) as usize;
    let provenance: Provenance = serde_json::from_slice(take(bytes, &mut pos, plen)?)
        .map_err(|e| bad(format!("provenance: {e}")))?;
    if pos != bytes.len() {
        return Err(bad("trailing bytes".into()));
    }
    Signal::new(samples, fs, provenance)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn encode_csv(x: &Signal) -> String {
    let mut s = format!("{}\n", x.fs());
    for v in x.samples() {
        s.push_str(&format!("{v:?}\n"));
    }
    s
}

pub fn decode_csv(text: &str) -> Result<Signal> {
    let bad = |d: String| Error::format("signal CSV", d);
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| bad("missing fs header".into()))?;
    let fs: u32 = header.parse().map_err(|_| bad(format!("header `{header}` is not an integer fs")))?;
    let samples = lines
        .enumerate()
        .map(|(i, l)| l.parse::<f64>().map_err(|_| bad(format!("line {}: `{l}`", i + 2))))
        .collect::<Result<Vec<_>>>()?;
    Signal::from_samples(samples, fs)
}

/// Reads either format, chosen by the `.csv` extension.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let bytes = read_bytes(path)?;
    let with_path = |e: Error| match e {
        Error::Format { what, detail } => Error::format(format!("{what} {}", path.display()), detail),
        other => other,
    };
    if is_csv(path) {
        let text = String::from_utf8(bytes).map_err(|_| Error::format("signal CSV", "not UTF-8"))?;
        decode_csv(&text).map_err(with_path)
    } else {
        decode_signal(&bytes).map_err(with_path)
    }
}

pub fn write_signal(path: &Path, x: &Signal) -> Result<()> {
    if is_csv(path) {
        write_atomic(path, encode_csv(x).as_bytes())
    } else {
        write_atomic(path, &encode_signal(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Signal {
        let prov = Provenance {
            source: "unit".into(),
            channel: "2".into(),
            subject: "s07".into(),
            exercise: "E1".into(),
            segment: Some(3),
        };
        Signal::new(vec![0.1, -2.5, 1e-300, 3.0], 1000, prov).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let x = sample();
        let bytes = encode_signal(&x).unwrap();
        assert_eq!(&bytes[..4], b"MSG1");
        assert_eq!(bytes[4], 1);
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 1000);
        assert_eq!(u64::from_le_bytes(bytes[9..17].try_into().unwrap()), 4);
        assert_eq!(decode_signal(&bytes).unwrap(), x);
    }

    #[test]
    fn corrupt_binary_is_rejected() {
        let bytes = encode_signal(&sample()).unwrap();
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(decode_signal(&b).is_err());
        let mut b = bytes.clone();
        b[4] = 2;
        assert!(decode_signal(&b).is_err());
        assert!(decode_signal(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let x = Signal::from_samples(vec![0.1, -2.5, 0.3333333333333333], 128).unwrap();
        assert_eq!(decode_csv(&encode_csv(&x)).unwrap(), x);
        assert!(decode_csv("abc\n1.0").is_err());
        assert!(decode_csv("100\n1.0\nfoo").is_err());
    }

    #[test]
    fn files_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let x = sample();
        for name in ["a.msg", "b.csv"] {
            let p = dir.path().join(name);
            write_signal(&p, &x).unwrap();
            let y = read_signal(&p).unwrap();
            assert_eq!(y.samples(), x.samples());
        }
    }
}
