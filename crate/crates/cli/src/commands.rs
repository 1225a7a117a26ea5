use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use msemg::data::{
    build_dataset, read_pairs, read_signal, write_pairs, write_signal, write_synthetic_corpus, DatasetManifest,
    Signal, Split, SynthCorpusConfig,
};
use msemg::denoise::{Denoiser, DenoiserRegistry};
use msemg::fsutil::{read_bytes, write_atomic, write_json};
use msemg::metrics::{evaluate as score, EvalConfig, MetricsReport, SummaryRow};
use msemg::nn::{count_parameters, read_checkpoint, save_checkpoint, ModelConfig, ModelParams, REFERENCE_COUNTS};
use msemg::train::{train_with, TrainConfig};
use msemg::{Error, Result};
use serde::Serialize;

use crate::config::{resolve, write_snapshot, Overrides};
use crate::{CompareArgs, DenoiseArgs, EvaluateArgs, InspectArgs, MixArgs, SynthArgs, TrainArgs};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn base_dir(file: &Path) -> &Path {
    file.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut o = Overrides::default();
    o.set("count", a.count)
        .set("duration_s", a.duration)
        .set("fs", a.fs)
        .set("segment_seconds", a.segment_seconds)
        .set("seed", a.seed);
    let cfg: SynthCorpusConfig = resolve(a.config.as_deref(), o)?;
    let m = write_synthetic_corpus(&cfg, &a.out)?;
    write_snapshot(&a.out, "synth", &cfg)?;
    println!(
        "wrote {} sEMG and {} ECG recordings to {} (manifest.json: {} train / {} val / {} test clean files)",
        cfg.count,
        cfg.count,
        a.out.display(),
        m.train.clean.len(),
        m.val.clean.len(),
        m.test.clean.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct MixSettings<'a> {
    manifest: &'a Path,
    seed: u64,
}

pub fn mix(a: MixArgs) -> Result<()> {
    let mut m = DatasetManifest::load(&a.manifest)?;
    if let Some(seed) = a.seed {
        m.seed = seed;
    }
    let ds = build_dataset(&m, base_dir(&a.manifest))?;
    let idx = write_pairs(&ds, m.seed, &a.out)?;
    write_snapshot(
        &a.out,
        "mix",
        &MixSettings {
            manifest: &a.manifest,
            seed: m.seed,
        },
    )?;
    println!(
        "wrote {} pairs ({} train / {} val / {} test) to {}",
        idx.entries.len(),
        idx.count(Split::Train),
        idx.count(Split::Val),
        idx.count(Split::Test),
        a.out.join("pairs.json").display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSettings<'a> {
    manifest: &'a Path,
    model: &'a ModelConfig,
    train: &'a TrainConfig,
}

#[derive(Serialize)]
struct TrainSummary {
    initial_val_snr_imp_db: f64,
    best_epoch: usize,
    best_val_snr_imp_db: f64,
    epochs_run: usize,
    parameters: usize,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut mo = Overrides::default();
    mo.set("seed", a.seed);
    let model: ModelConfig = resolve(a.model_config.as_deref(), mo)?;
    let mut to = Overrides::default();
    to.set("seed", a.seed)
        .set("epochs", a.epochs)
        .set("batch_size", a.batch_size)
        .set("optimizer.lr", a.lr)
        .set("crop_length", a.crop_length)
        .set("clip_norm", a.clip_norm)
        .set("patience", a.patience)
        .set("checkpoint_every", a.checkpoint_every);
    let cfg: TrainConfig = resolve(a.train_config.as_deref(), to)?;
    cfg.validate()?;
    model.validate()?;

    let manifest = DatasetManifest::load(&a.manifest)?;
    let ds = build_dataset(&manifest, base_dir(&a.manifest))?;
    write_snapshot(
        &a.out,
        "train",
        &TrainSettings {
            manifest: &a.manifest,
            model: &model,
            train: &cfg,
        },
    )?;

    let init = ModelParams::init(model)?;
    let log_path = a.out.join("train_log.jsonl");
    let mut log = String::new();
    write_atomic(&log_path, log.as_bytes())?;
    let out = train_with(&ds.train, &ds.val, init, &cfg, |rec, params| {
        log.push_str(&serde_json::to_string(rec)?);
        log.push('\n');
        write_atomic(&log_path, log.as_bytes())?;
        if rec.best {
            save_checkpoint(&a.out.join("model.msmg"), params)?;
        }
        if cfg.checkpoint_every > 0 && rec.epoch % cfg.checkpoint_every == 0 {
            save_checkpoint(&a.out.join(format!("checkpoints/epoch_{:04}.msmg", rec.epoch)), params)?;
        }
        eprintln!(
            "epoch {:>4}  loss {:.6e}  val SNR_imp {:>8.3} dB{}{}",
            rec.epoch,
            rec.train_loss,
            rec.val_snr_imp_db,
            if rec.clipped_steps > 0 {
                format!("  clipped {}/{}", rec.clipped_steps, rec.steps)
            } else {
                String::new()
            },
            if rec.best { "  *" } else { "" }
        );
        Ok(())
    })?;
    save_checkpoint(&a.out.join("model.msmg"), &out.best)?;
    save_checkpoint(&a.out.join("last.msmg"), &out.last)?;
    write_json(
        &a.out.join("train_summary.json"),
        &TrainSummary {
            initial_val_snr_imp_db: out.initial_val_snr_imp_db,
            best_epoch: out.best_epoch,
            best_val_snr_imp_db: out.best_val_snr_imp_db,
            epochs_run: out.log.len(),
            parameters: count_parameters(&out.best),
        },
    )?;
    println!(
        "best validation SNR_imp {:.3} dB at epoch {} (initial {:.3} dB); checkpoint {}",
        out.best_val_snr_imp_db,
        out.best_epoch,
        out.initial_val_snr_imp_db,
        a.out.join("model.msmg").display()
    );
    Ok(())
}

fn denoise_segmented(d: &dyn Denoiser, x: &Signal, seconds: Option<f64>) -> Result<Signal> {
    let Some(s) = seconds else {
        return d.denoise(x);
    };
    let n = (s * x.fs() as f64).round();
    if !(n >= 1.0 && n.is_finite()) {
        return Err(invalid(format!("segment length {s} s is shorter than one sample")));
    }
    let mut out = Vec::with_capacity(x.len());
    for chunk in x.samples().chunks(n as usize) {
        let part = x.with_samples(chunk.to_vec())?;
        out.extend_from_slice(d.denoise(&part)?.samples());
    }
    x.with_samples(out)
}

#[derive(Serialize)]
struct DenoiseSettings<'a> {
    denoiser: &'a str,
    segment_seconds: Option<f64>,
    inputs: &'a [PathBuf],
}

pub fn denoise(a: DenoiseArgs) -> Result<()> {
    let spec = match (&a.denoiser, &a.checkpoint) {
        (Some(s), None) => s.clone(),
        (None, Some(p)) => format!("msemg:checkpoint={}", p.display()),
        _ => return Err(invalid("give exactly one of --denoiser or --checkpoint")),
    };
    let d = DenoiserRegistry::with_builtins().create(&spec)?;
    let mut targets = Vec::with_capacity(a.inputs.len());
    for input in &a.inputs {
        let name = input
            .file_name()
            .ok_or_else(|| invalid(format!("{} is not a file", input.display())))?;
        let target = a.out.join(name);
        if target == *input || targets.contains(&target) {
            return Err(invalid(format!("output {} would overwrite an input or another output", target.display())));
        }
        targets.push(target);
    }
    for (input, target) in a.inputs.iter().zip(&targets) {
        let x = read_signal(input)?;
        let y = denoise_segmented(d.as_ref(), &x, a.segment_seconds)?;
        if y.samples().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: format!("denoising {}", input.display()),
            });
        }
        write_signal(target, &y)?;
    }
    write_snapshot(
        &a.out,
        "denoise",
        &DenoiseSettings {
            denoiser: d.name(),
            segment_seconds: a.segment_seconds,
            inputs: &a.inputs,
        },
    )?;
    println!("denoised {} file(s) with {} into {}", a.inputs.len(), d.name(), a.out.display());
    Ok(())
}

const SUMMARY_HEADER: [&str; 5] = ["denoiser", "snr_imp_db", "rmse", "rmse_arv", "rmse_mf_hz"];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = SUMMARY_HEADER.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:?},{:?},{:?},{:?}",
            csv_field(&r.denoiser),
            r.snr_imp_db,
            r.rmse,
            r.rmse_arv,
            r.rmse_mf_hz
        );
    }
    s
}

fn summary_table(rows: &[SummaryRow]) -> String {
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.denoiser.clone(),
                format!("{:.3}", r.snr_imp_db),
                format!("{:.4e}", r.rmse),
                format!("{:.4e}", r.rmse_arv),
                format!("{:.3}", r.rmse_mf_hz),
            ]
        })
        .collect();
    let mut width = SUMMARY_HEADER.map(str::len);
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let mut line = |row: &[String]| {
        let _ = write!(s, "{:<w$}", row[0], w = width[0]);
        for (c, w) in row[1..].iter().zip(&width[1..]) {
            let _ = write!(s, "  {c:>w$}");
        }
        s.push('\n');
    };
    line(&SUMMARY_HEADER.map(String::from));
    for row in &cells {
        line(row);
    }
    s
}

fn slug(spec: &str) -> String {
    spec.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

fn parse_split(s: &str) -> Result<Split> {
    Split::ALL
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| invalid(format!("unknown split `{s}` (train, val, test)")))
}

#[derive(Serialize)]
struct EvaluateSettings<'a> {
    pairs: &'a Path,
    split: Option<&'a str>,
    denoisers: &'a [String],
    metrics: &'a EvalConfig,
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let mut o = Overrides::default();
    o.set("arv_window_ms", a.arv_window_ms).set("mf_window_ms", a.mf_window_ms);
    let cfg: EvalConfig = resolve(a.config.as_deref(), o)?;
    let split = a.split.as_deref().map(parse_split).transpose()?;
    let registry = DenoiserRegistry::with_builtins();
    let denoisers = a
        .denoisers
        .iter()
        .map(|s| registry.create(s))
        .collect::<Result<Vec<_>>>()?;
    let pairs = read_pairs(&a.pairs, split)?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput(format!("{} lists no pairs for that split", a.pairs.display())));
    }
    let mut rows = Vec::new();
    let mut used = Vec::new();
    for (spec, d) in a.denoisers.iter().zip(&denoisers) {
        let report = score(&pairs, d.as_ref(), &cfg)?;
        let mut stem = slug(spec);
        if used.contains(&stem) {
            stem = format!("{stem}_{}", used.len());
        }
        write_atomic(&a.out.join(format!("{stem}.json")), report.to_json()?.as_bytes())?;
        write_atomic(&a.out.join(format!("{stem}.csv")), report.to_csv().as_bytes())?;
        for e in &report.excluded {
            eprintln!("{}: pair {} excluded: {}", d.name(), e.index, e.reason);
        }
        rows.push(report.summary());
        used.push(stem);
    }
    write_atomic(&a.out.join("summary.csv"), summary_csv(&rows).as_bytes())?;
    write_snapshot(
        &a.out,
        "evaluate",
        &EvaluateSettings {
            pairs: &a.pairs,
            split: a.split.as_deref(),
            denoisers: &a.denoisers,
            metrics: &cfg,
        },
    )?;
    print!("{}", summary_table(&rows));
    Ok(())
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let text = String::from_utf8(read_bytes(p)?)
                .map_err(|e| Error::Format { what: "report".into(), detail: e.to_string() })?;
            MetricsReport::from_json(&text).map_err(|e| match e {
                Error::Format { what, detail } => Error::Format {
                    what: format!("{what} {}", p.display()),
                    detail,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first = &reports[0].config;
    if let Some((i, _)) = reports.iter().enumerate().find(|(_, r)| r.config != *first) {
        return Err(Error::DimensionMismatch(format!(
            "{} was scored with different feature windows than {}",
            a.reports[i].display(),
            a.reports[0].display()
        )));
    }
    let rows: Vec<SummaryRow> = reports.iter().map(MetricsReport::summary).collect();
    if let Some(path) = &a.csv {
        write_atomic(path, summary_csv(&rows).as_bytes())?;
    }
    print!("{}", summary_table(&rows));
    Ok(())
}

pub fn inspect(a: InspectArgs) -> Result<()> {
    let bytes = read_bytes(&a.checkpoint)?;
    let (params, width) = match read_checkpoint::<f32>(&bytes) {
        Ok(p) => (p.cast::<f64>(), "f32"),
        Err(first) => match read_checkpoint::<f64>(&bytes) {
            Ok(p) => (p, "f64"),
            Err(_) => return Err(first),
        },
    };
    let mut s = String::new();
    let _ = writeln!(s, "checkpoint: {}", a.checkpoint.display());
    let _ = writeln!(s, "scalars:    {width}");
    let _ = writeln!(s, "config:     {}", serde_json::to_string(&params.config)?);
    let tensors = params.tensors();
    let name_w = tensors.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    for (name, t) in &tensors {
        let _ = writeln!(s, "  {name:<name_w$}  {:>8}", t.len());
    }
    let _ = writeln!(s, "parameters: {}", count_parameters(&params));
    let _ = writeln!(s, "reference counts:");
    for (name, n) in REFERENCE_COUNTS {
        let _ = writeln!(s, "  {name:<6} {n:>10}");
    }
    print!("{s}");
    Ok(())
}
