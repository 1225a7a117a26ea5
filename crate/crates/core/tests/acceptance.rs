//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use msemg::data::{
    mix_at_snr, snr_grid, synth_ecg_with, synth_semg, synthetic_dataset, write_synthetic_corpus, Dataset, EcgJitter,
    SynthCorpusConfig, SynthDatasetConfig,
};
use msemg::denoise::{Denoiser, Highpass, Identity, MsemgDenoiser, TemplateSubtraction};
use msemg::dsp::{design_butterworth, FilterKind};
use msemg::metrics::{arv_features, evaluate, evaluate_with, mf_features, EvalConfig};
use msemg::nn::{write_checkpoint, ModelConfig, ModelParams};
use msemg::signal::rms;
use msemg::ssm::{
    apply_kernel, diag_matrix, discretize_zoh, selective_scan, simulate_continuous_rk4, ssm_scan_lti, unroll_kernel,
    SelectiveInputs, SsmParams, SsmState,
};
use msemg::train::{gradient_check, train, validation_snr_imp, TrainConfig, GRAD_CHECK_EPS, GRAD_CHECK_FLOOR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e2s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn random_input(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn scan_kernel_duality(_: &Dataset) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = rng.random_range(1..=8);
        let delta = rng.random_range(1e-3..0.5);
        let p = SsmParams::random_stable(h, (-5.0, -1e-3), delta, &mut rng).map_err(e2s)?;
        let x = random_input(&mut rng, 256);
        let disc = discretize_zoh(&p).map_err(e2s)?;
        let scan = ssm_scan_lti(&disc, p.c(), &x, &SsmState::zeros(h)).map_err(e2s)?;
        let kernel = unroll_kernel(&disc, p.c(), x.len() - 1).map_err(e2s)?;
        let conv = apply_kernel(&x, &kernel).map_err(e2s)?;
        for (a, b) in scan.iter().zip(&conv) {
            worst = worst.max((a - b).abs());
        }
    }
    let took = start.elapsed();
    check(
        worst <= 1e-9 && took < Duration::from_secs(5),
        format!("max abs diff {worst:.3e} (≤ 1e-9), {:.3} s (< 5 s)", took.as_secs_f64()),
    )
}

fn zoh_vs_rk4(_: &Dataset) -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let h = rng.random_range(1..=8);
        let delta = rng.random_range(0.01..0.2);
        let p = SsmParams::random_stable(h, (-5.0, -0.01), delta, &mut rng).map_err(e2s)?;
        let x = random_input(&mut rng, 200);
        let disc = discretize_zoh(&p).map_err(e2s)?;
        let y = ssm_scan_lti(&disc, p.c(), &x, &SsmState::zeros(h)).map_err(e2s)?;
        let reference = simulate_continuous_rk4(&diag_matrix(p.a()), p.b(), p.c(), &x, delta, 100, &vec![0.0; h]);
        let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = y.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / scale);
    }
    check(worst <= 1e-6, format!("max relative error {worst:.3e} (≤ 1e-6)"))
}

fn selectivity_reduction(_: &Dataset) -> Outcome {
    let t = 128;
    let mut worst = 0.0f64;
    let mut causal = true;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let h = rng.random_range(1..=8);
        let delta = rng.random_range(1e-3..0.5);
        let p = SsmParams::random_stable(h, (-5.0, -1e-3), delta, &mut rng).map_err(e2s)?;
        let x = random_input(&mut rng, t);
        let disc = discretize_zoh(&p).map_err(e2s)?;
        let lti = ssm_scan_lti(&disc, p.c(), &x, &SsmState::zeros(h)).map_err(e2s)?;
        let deltas = vec![delta; t];
        let b: Vec<f64> = (0..t).flat_map(|_| p.b().iter().copied()).collect();
        let c: Vec<f64> = (0..t).flat_map(|_| p.c().iter().copied()).collect();
        let sel = SelectiveInputs::new(&deltas, &b, &c, h).map_err(e2s)?;
        let y = selective_scan(&x, &sel, p.a()).map_err(e2s)?;
        worst = y.iter().zip(&lti).fold(worst, |m, (a, b)| m.max((a - b).abs()));

        // time-varying inputs, perturbed from step k on
        let deltas: Vec<f64> = (0..t).map(|_| rng.random_range(1e-3..0.5)).collect();
        let b = random_input(&mut rng, t * h);
        let c = random_input(&mut rng, t * h);
        let sel = SelectiveInputs::new(&deltas, &b, &c, h).map_err(e2s)?;
        let base = selective_scan(&x, &sel, p.a()).map_err(e2s)?;
        let k = rng.random_range(1..t);
        let mut x2 = x.clone();
        let (mut d2, mut b2, mut c2) = (deltas.clone(), b.clone(), c.clone());
        for i in k..t {
            x2[i] += rng.random_range(-1.0..1.0);
            d2[i] = rng.random_range(1e-3..0.5);
        }
        for v in b2[k * h..].iter_mut().chain(c2[k * h..].iter_mut()) {
            *v = rng.random_range(-1.0..1.0);
        }
        let sel2 = SelectiveInputs::new(&d2, &b2, &c2, h).map_err(e2s)?;
        let pert = selective_scan(&x2, &sel2, p.a()).map_err(e2s)?;
        causal &= base[..k].iter().zip(&pert[..k]).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    check(
        worst <= 1e-12 && causal,
        format!("max abs diff {worst:.3e} (≤ 1e-12), prefix bit-identical: {causal}"),
    )
}

fn gradient_suite(_: &Dataset) -> Outcome {
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    let mut checked = 0;
    for seed in 0..5u64 {
        let params = ModelParams::<f64>::init(ModelConfig::tiny(seed)).map_err(e2s)?;
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let x = random_input(&mut rng, 16);
        let target = random_input(&mut rng, 16);
        let g = gradient_check(&x, &target, &params, GRAD_CHECK_EPS, GRAD_CHECK_FLOOR).map_err(e2s)?;
        checked += g.checked;
        if g.max_rel_err > worst {
            worst = g.max_rel_err;
            where_ = format!("seed {seed} {}", g.worst);
        }
    }
    check(
        worst <= 1e-4,
        format!("{checked} entries, max relative error {worst:.3e} at {where_} (≤ 1e-4, floor {GRAD_CHECK_FLOOR:e})"),
    )
}

fn mixing_exactness(_: &Dataset) -> Outcome {
    let grid = snr_grid(-15.0, 0.0, 1.0);
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let clean = synth_semg(2.0, 1000, seed).map_err(e2s)?;
        let ecg = synth_ecg_with(2.0, 1000, 70.0, 10_000 + seed, EcgJitter::default()).map_err(e2s)?;
        for &snr in &grid {
            let pair = mix_at_snr(&clean, &ecg.signal, snr).map_err(e2s)?;
            worst = worst.max((pair.measured_snr_db() - snr).abs());
        }
    }
    check(
        worst <= 1e-9,
        format!("{} levels × 100 pairs, max error {worst:.3e} dB (≤ 1e-9)", grid.len()),
    )
}

fn metric_identities(ds: &Dataset) -> Outcome {
    let cfg = EvalConfig::default();
    let ident = evaluate(&ds.test, &Identity, &cfg).map_err(e2s)?;
    let ident_zero = ident.records.iter().all(|r| r.snr_imp_db == 0.0) && ident.excluded.is_empty();
    let oracle = evaluate_with(&ds.test, "oracle", &cfg, |p| Ok(p.clean.clone())).map_err(e2s)?;
    let oracle_ok = oracle.records.iter().all(|r| r.rmse == 0.0 && r.capped && r.snr_imp_db.is_finite());

    let sine: Vec<f64> = (0..2000).map(|i| (2.0 * PI * 10.0 * i as f64 / 1000.0).sin()).collect();
    let arv = arv_features(&sine, 1000, 500.0).map_err(e2s)?;
    let arv_err = arv.values.iter().fold(0.0f64, |m, v| m.max((v - 2.0 / PI).abs()));

    let tone: Vec<f64> = (0..2000).map(|i| (2.0 * PI * 100.0 * i as f64 / 1000.0).sin()).collect();
    let mf = mf_features(&tone, 1000, 500.0).map_err(e2s)?;
    let bin = 1000.0 / 500usize.next_power_of_two() as f64;
    let mf_err = mf.values.iter().fold(0.0f64, |m, v| m.max((v - 100.0).abs()));

    check(
        ident_zero && oracle_ok && arv_err <= 1e-3 && mf_err <= bin,
        format!(
            "identity zero: {ident_zero}, oracle rmse 0 + capped: {oracle_ok}, ARV err {arv_err:.2e} (≤ 1e-3), \
             MF err {mf_err:.3} Hz (≤ {bin:.3})"
        ),
    )
}

fn filter_suite(_: &Dataset) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let rates = [250.0, 500.0, 1000.0, 2000.0, 4000.0];
    let (mut unstable, mut dc_worst, mut edge_worst) = (0, 0.0f64, 0.0f64);
    for _ in 0..300 {
        let fs: f64 = rates[rng.random_range(0..rates.len())];
        let order = rng.random_range(1..=8);
        let nyq = fs / 2.0;
        let (kind, cutoffs) = match rng.random_range(0..3) {
            0 => (FilterKind::Lowpass, vec![rng.random_range(0.02..0.9) * nyq]),
            1 => (FilterKind::Highpass, vec![rng.random_range(0.02..0.9) * nyq]),
            _ => {
                let lo = rng.random_range(0.02..0.6) * nyq;
                (FilterKind::Bandpass, vec![lo, rng.random_range(lo / nyq + 0.1..0.95) * nyq])
            }
        };
        let f = design_butterworth(order, kind, &cutoffs, fs).map_err(e2s)?;
        if !f.is_stable() {
            unstable += 1;
        }
        if kind == FilterKind::Highpass {
            dc_worst = dc_worst.max(f.response(0.0).norm());
        }
        for &c in &cutoffs {
            edge_worst = edge_worst.max((f.magnitude_db(c) + 3.0103).abs());
        }
    }
    let bp = design_butterworth(4, FilterKind::Bandpass, &[20.0, 500.0], 2000.0).map_err(e2s)?;
    let atten = -bp.magnitude_db(1.0);
    check(
        unstable == 0 && dc_worst <= 1e-12 && edge_worst <= 0.05 && atten >= 40.0,
        format!(
            "300 designs, unstable {unstable}, HP |H(1)| {dc_worst:.2e} (≤ 1e-12), cutoff error {edge_worst:.4} dB \
             (≤ 0.05), BP 1 Hz attenuation {atten:.1} dB (≥ 40)"
        ),
    )
}

fn baselines(ds: &Dataset) -> Outcome {
    let ecg = synth_ecg_with(20.0, 1000, 60.0, 5, EcgJitter::NONE).map_err(e2s)?.signal;
    let ts = TemplateSubtraction::new(600.0).map_err(e2s)?;
    let out = ts.denoise(&ecg).map_err(e2s)?;
    let ratio = rms(out.samples()) / rms(ecg.samples());
    let hp = Highpass::new(40.0, 4).map_err(e2s)?;
    let hp_imp = evaluate(&ds.test, &hp, &EvalConfig::default()).map_err(e2s)?.overall.snr_imp_db;
    check(
        ratio <= 1e-3 && hp_imp > 0.0,
        format!("TS residual/artifact RMS {ratio:.3e} (≤ 1e-3), HP mean SNR_imp {hp_imp:.2} dB (> 0)"),
    )
}

fn training_progress(ds: &Dataset) -> Outcome {
    let model = ModelConfig::default();
    let cfg = TrainConfig {
        epochs: 12,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let outcome = train(&ds.train, &ds.val, &model, &cfg).map_err(e2s)?;
    let took = start.elapsed().as_secs_f64();
    let init = ModelParams::<f32>::init(model).map_err(e2s)?;
    let epoch0 = validation_snr_imp(&init, &ds.test).map_err(e2s)?;
    let net = MsemgDenoiser::new(outcome.best, "msemg").map_err(e2s)?;
    let net_imp = evaluate(&ds.test, &net, &EvalConfig::default()).map_err(e2s)?.overall.snr_imp_db;
    let hp = Highpass::new(40.0, 4).map_err(e2s)?;
    let hp_imp = evaluate(&ds.test, &hp, &EvalConfig::default()).map_err(e2s)?.overall.snr_imp_db;
    check(
        took <= 600.0 && net_imp >= hp_imp + 2.0 && net_imp >= epoch0 + 3.0,
        format!(
            "{took:.0} s (≤ 600), test SNR_imp {net_imp:.2} dB vs HP {hp_imp:.2} dB (+2 needed) and epoch-0 \
             {epoch0:.2} dB (+3 needed), best epoch {}",
            outcome.best_epoch
        ),
    )
}

fn tree(dir: &Path) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path)?);
            }
        }
    }
    Ok(out)
}

fn reproducibility(_: &Dataset) -> Outcome {
    let corpus = SynthCorpusConfig {
        count: 4,
        duration_s: 4.0,
        ..SynthCorpusConfig::default()
    };
    let (a, b) = (tempfile::tempdir().map_err(e2s)?, tempfile::tempdir().map_err(e2s)?);
    write_synthetic_corpus(&corpus, a.path()).map_err(e2s)?;
    write_synthetic_corpus(&corpus, b.path()).map_err(e2s)?;
    let ta = tree(a.path()).map_err(e2s)?;
    let corpus_same = !ta.is_empty() && ta == tree(b.path()).map_err(e2s)?;

    let dcfg = SynthDatasetConfig {
        clean: [16, 4, 4],
        seed: 9,
        ..SynthDatasetConfig::default()
    };
    let d1 = synthetic_dataset(&dcfg).map_err(e2s)?;
    let d2 = synthetic_dataset(&dcfg).map_err(e2s)?;
    let data_same = d1 == d2;

    let tcfg = TrainConfig {
        epochs: 2,
        batch_size: 4,
        seed: 3,
        ..TrainConfig::default()
    };
    let run = || -> msemg::Result<(Vec<u8>, String)> {
        let out = train(&d1.train, &d1.val, &ModelConfig::tiny(3), &tcfg)?;
        let bytes = write_checkpoint(&out.best)?;
        let net = MsemgDenoiser::new(out.best, "msemg")?;
        let report = evaluate(&d1.test, &net, &EvalConfig::default())?.to_json()?;
        Ok((bytes, report))
    };
    let (c1, r1) = run().map_err(e2s)?;
    let (c2, r2) = run().map_err(e2s)?;
    let ckpt_same = c1 == c2;
    let report_same = r1 == r2;
    check(
        corpus_same && data_same && ckpt_same && report_same,
        format!(
            "corpus ({} files): {corpus_same}, dataset: {data_same}, checkpoint ({} bytes): {ckpt_same}, \
             report: {report_same}",
            ta.len(),
            c1.len()
        ),
    )
}

fn main() -> ExitCode {
    let ds = match synthetic_dataset(&SynthDatasetConfig::default()) {
        Ok(ds) => ds,
        Err(e) => {
            eprintln!("acceptance: could not build the synthetic dataset: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: [(&str, fn(&Dataset) -> Outcome); 10] = [
        ("scan/kernel duality", scan_kernel_duality),
        ("ZOH vs continuous oracle", zoh_vs_rk4),
        ("selectivity reduction and causality", selectivity_reduction),
        ("gradient suite", gradient_suite),
        ("mixing exactness", mixing_exactness),
        ("metric identities", metric_identities),
        ("filter suite", filter_suite),
        ("baselines on synthetics", baselines),
        ("training progress", training_progress),
        ("reproducibility", reproducibility),
    ];
    let mut passed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run(&ds);
        let took = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => {
                passed += 1;
                ("PASS", d)
            }
            Err(d) => ("FAIL", d),
        };
        println!("{tag}  [{}] {name} ({took:.1} s): {detail}", i + 1);
    }
    println!("acceptance: {passed} of {} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
