use msemg::data::{mix_at_snr, synth_ecg, synth_ecg_with, synth_semg, EcgJitter, Signal};
use msemg::dsp::{detect_r_peaks, resample, template_subtract, RPeakList};
use msemg::signal::rms;

/// Every planted peak has a detection within `tol` samples and vice versa.
fn matched(planted: &[usize], found: &[usize], tol: usize) -> Result<(), String> {
    let near = |a: usize, set: &[usize]| set.iter().any(|&b| a.abs_diff(b) <= tol);
    // beats whose support is cut by the signal edges are not required
    for &p in planted {
        if !near(p, found) {
            return Err(format!("planted peak {p} missed; found {found:?}"));
        }
    }
    for &f in found {
        if !near(f, planted) {
            return Err(format!("spurious peak {f}; planted {planted:?}"));
        }
    }
    Ok(())
}

fn interior(peaks: &[usize], len: usize, margin: usize) -> Vec<usize> {
    peaks.iter().copied().filter(|&p| p >= margin && p + margin < len).collect()
}

#[test]
fn r_peaks_within_ten_ms_on_clean_ecg() {
    for (seed, bpm) in [(1, 50.0), (2, 72.0), (3, 95.0), (4, 140.0)] {
        let ecg = synth_ecg(12.0, 1000, bpm, seed).unwrap();
        let found = detect_r_peaks(&ecg.signal).unwrap();
        let n = ecg.signal.len();
        matched(
            &interior(&ecg.planted_peaks, n, 100),
            &interior(&found.indices, n, 100),
            10,
        )
        .unwrap_or_else(|e| panic!("bpm {bpm}: {e}"));
    }
}

#[test]
fn r_peaks_within_ten_ms_at_minus_ten_db() {
    for seed in 0..4u64 {
        let ecg = synth_ecg(12.0, 1000, 70.0, 20 + seed).unwrap();
        let emg = synth_semg(12.0, 1000, 40 + seed).unwrap();
        let pair = mix_at_snr(&emg, &ecg.signal, -10.0).unwrap();
        let found = detect_r_peaks(&pair.mixed).unwrap();
        let n = pair.mixed.len();
        matched(
            &interior(&ecg.planted_peaks, n, 100),
            &interior(&found.indices, n, 100),
            10,
        )
        .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn resampling_round_trip_preserves_band_limited_signal() {
    let fs = 1000;
    let x: Vec<f64> = (0..4000)
        .map(|i| {
            let t = i as f64 / fs as f64;
            (2.0 * std::f64::consts::PI * 13.0 * t).sin() + 0.5 * (2.0 * std::f64::consts::PI * 87.0 * t).cos()
        })
        .collect();
    let sig = Signal::from_samples(x.clone(), fs).unwrap();
    for mid in [2000, 4000, 360] {
        let up = resample(&sig, mid).unwrap();
        let back = resample(&up, fs).unwrap();
        assert_eq!(back.len(), x.len());
        // skip the filter transients at both ends
        let err = back.samples()[200..3800]
            .iter()
            .zip(&x[200..3800])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-3, "via {mid} Hz: {err}");
    }
}

#[test]
fn template_subtraction_on_periodic_artifact() {
    let ecg = synth_ecg_with(20.0, 1000, 60.0, 5, EcgJitter::NONE).unwrap().signal;
    let peaks = detect_r_peaks(&ecg).unwrap();
    let out = template_subtract(&ecg, &peaks, 600.0).unwrap();
    assert!(!out.skipped);
    assert!(out.beats_used >= 15);
    assert!(rms(out.signal.samples()) <= 1e-3 * rms(ecg.samples()));
}

#[test]
fn template_subtraction_is_idempotent_on_its_own_peaks() {
    // Subtracting again at the same peaks removes a template of the
    // residual, which is already beat-free.
    let ecg = synth_ecg_with(20.0, 1000, 60.0, 6, EcgJitter::NONE).unwrap().signal;
    let emg = synth_semg(20.0, 1000, 7).unwrap();
    let mixed = mix_at_snr(&emg, &ecg, -10.0).unwrap().mixed;
    let peaks = detect_r_peaks(&mixed).unwrap();
    let once = template_subtract(&mixed, &peaks, 600.0).unwrap().signal;
    let twice = template_subtract(&once, &RPeakList::new(peaks.indices.clone()), 600.0).unwrap().signal;
    let drift = rms(
        &once
            .samples()
            .iter()
            .zip(twice.samples())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    assert!(drift <= 0.05 * rms(once.samples()), "drift {drift}");
}

#[test]
fn template_subtraction_removes_most_of_the_artifact() {
    let ecg = synth_ecg(20.0, 1000, 75.0, 8).unwrap().signal;
    let emg = synth_semg(20.0, 1000, 9).unwrap();
    let pair = mix_at_snr(&emg, &ecg, -10.0).unwrap();
    let peaks = detect_r_peaks(&pair.mixed).unwrap();
    let out = template_subtract(&pair.mixed, &peaks, 600.0).unwrap().signal;
    let before = rms(&pair.mixed.samples().iter().zip(emg.samples()).map(|(a, b)| a - b).collect::<Vec<_>>());
    let after = rms(&out.samples().iter().zip(emg.samples()).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(after < 0.5 * before, "{after} vs {before}");
}
