//! `msemg`: synthesize data, mix pairs, train, denoise, evaluate, compare
//! and inspect.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 I/O failure,
//! 4 numerical failure (non-finite loss or output).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msemg::ErrorClass;

#[derive(Parser)]
#[command(name = "msemg", version, about = "sEMG denoising toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic sEMG/ECG corpus and its manifest.
    Synth(SynthArgs),
    /// Materialize the noisy pairs of a manifest with an index.
    Mix(MixArgs),
    /// Train the network on a manifest's train split.
    Train(TrainArgs),
    /// Denoise signal files with a checkpoint or a baseline.
    Denoise(DenoiseArgs),
    /// Score denoisers on a pair index.
    Evaluate(EvaluateArgs),
    /// Merge evaluation reports into one table.
    Compare(CompareArgs),
    /// Print a checkpoint's configuration and parameter count.
    Inspect(InspectArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON settings file (keys: count, duration_s, fs, segment_seconds, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Recording length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Raw sEMG sampling rate.
    #[arg(long)]
    pub fs: Option<u32>,
    #[arg(long)]
    pub segment_seconds: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct MixArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the manifest's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON network configuration.
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    /// JSON training configuration.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Seeds both initialization and batching.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    /// Crop length in samples; 0 trains on whole segments.
    #[arg(long)]
    pub crop_length: Option<usize>,
    /// Global gradient-norm cap; 0 disables.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Args)]
pub struct DenoiseArgs {
    /// Denoiser spec, e.g. `hp`, `hp:cutoff=30`, `ts:window=500`.
    #[arg(long, conflicts_with = "checkpoint")]
    pub denoiser: Option<String>,
    /// Shorthand for `--denoiser msemg:checkpoint=PATH`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Process in consecutive segments of this length.
    #[arg(long)]
    pub segment_seconds: Option<f64>,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Index written by `mix`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Split to score; all pairs when omitted.
    #[arg(long)]
    pub split: Option<String>,
    /// Denoiser spec; repeat to score several.
    #[arg(long = "denoiser", required = true)]
    pub denoisers: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON settings file (keys: arv_window_ms, mf_window_ms).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub arv_window_ms: Option<f64>,
    #[arg(long)]
    pub mf_window_ms: Option<f64>,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Report JSON files written by `evaluate`.
    #[arg(required = true, num_args = 2..)]
    pub reports: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct InspectArgs {
    pub checkpoint: PathBuf,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Io => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Mix(a) => commands::mix(a),
        Command::Train(a) => commands::train(a),
        Command::Denoise(a) => commands::denoise(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
        Command::Inspect(a) => commands::inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
