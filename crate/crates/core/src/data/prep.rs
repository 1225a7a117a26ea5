use crate::error::{Error, Result};
use crate::signal::Signal;

/// Divide by the peak magnitude. An all-zero signal is returned unchanged
/// with scale 1.
pub fn normalize(x: &Signal) -> (Signal, f64) {
    let peak = x.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return (x.clone(), 1.0);
    }
    let y = x.samples().iter().map(|v| v / peak).collect();
    (x.with_samples(y).expect("scaling keeps samples finite"), peak)
}

pub fn denormalize(x: &Signal, scale: f64) -> Result<Signal> {
    x.with_samples(x.samples().iter().map(|v| v * scale).collect())
}

/// Non-overlapping segments of `⌊seconds·fs⌋` samples; the remainder is dropped.
pub fn segment(x: &Signal, seconds: f64) -> Result<Vec<Signal>> {
    let len = (seconds * x.fs() as f64).floor();
    if !(len >= 1.0) {
        return Err(Error::invalid(format!("segments of {seconds} s hold no samples at {} Hz", x.fs())));
    }
    let len = len as usize;
    x.samples()
        .chunks_exact(len)
        .enumerate()
        .map(|(i, chunk)| {
            let mut prov = x.provenance.clone();
            prov.segment = Some(i as u64);
            Signal::new(chunk.to_vec(), x.fs(), prov)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_cases() {
        let x = Signal::from_samples(vec![1.0, -2.0, 0.5], 10).unwrap();
        let (y, s) = normalize(&x);
        assert_eq!(s, 2.0);
        assert_eq!(y.samples(), &[0.5, -1.0, 0.25]);
        let z = Signal::from_samples(vec![0.0; 4], 10).unwrap();
        assert_eq!(normalize(&z), (z.clone(), 1.0));
    }

    #[test]
    fn segment_counts() {
        let x = Signal::from_samples((0..25_000).map(f64::from).collect(), 1000).unwrap();
        let segs = segment(&x, 10.0).unwrap();
        assert_eq!(segs.len(), 2);
        assert!(segs.iter().all(|s| s.len() == 10_000));
        assert_eq!(segs[1].provenance.segment, Some(1));
        let joined: Vec<f64> = segs.iter().flat_map(|s| s.samples().to_vec()).collect();
        assert_eq!(&joined[..], &x.samples()[..20_000]);
        assert!(segment(&x, 0.0001).is_err());
    }
}
