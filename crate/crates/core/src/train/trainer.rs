use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::NoisyPair;
use crate::error::{Error, Result};
use crate::metrics::snr_improvement;
use crate::nn::{ModelConfig, ModelParams};

use super::{adam_step, backward, clip_global_norm, AdamConfig, AdamState, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub seed: u64,
    /// Random crop length in samples; 0 trains on whole segments.
    pub crop_length: usize,
    pub loss: LossKind,
    /// Save a periodic checkpoint every this many epochs; 0 disables.
    pub checkpoint_every: usize,
    /// Stop after this many epochs without a better validation score; 0 disables.
    pub patience: usize,
    /// Global gradient-norm cap; 0 disables.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 8,
            optimizer: AdamConfig::default(),
            seed: 0,
            crop_length: 500,
            loss: LossKind::Mse,
            checkpoint_every: 0,
            patience: 0,
            clip_norm: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be positive"));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return Err(Error::invalid(format!("clip norm {} is not usable", self.clip_norm)));
        }
        self.optimizer.validate()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub train_loss: f64,
    pub val_snr_imp_db: f64,
    /// Steps whose gradient was rescaled by the norm cap.
    pub clipped_steps: usize,
    pub best: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the highest validation score seen.
    pub best: ModelParams<f32>,
    pub last: ModelParams<f32>,
    /// 0 when no epoch improved on the initial parameters.
    pub best_epoch: usize,
    pub best_val_snr_imp_db: f64,
    /// Validation score of the untrained initialization.
    pub initial_val_snr_imp_db: f64,
    pub log: Vec<EpochRecord>,
}

/// Mean SNR improvement of the network over `pairs`.
pub fn validation_snr_imp(params: &ModelParams<f32>, pairs: &[NoisyPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::empty("validation set is empty"));
    }
    let mut total = 0.0;
    for p in pairs {
        let x: Vec<f32> = p.mixed.samples().iter().map(|&v| v as f32).collect();
        let y: Vec<f64> = params.forward(&x)?.into_iter().map(f64::from).collect();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("validation forward pass"));
        }
        total += snr_improvement(p.clean.samples(), p.mixed.samples(), &y)?.db;
    }
    Ok(total / pairs.len() as f64)
}

pub fn train(
    train_pairs: &[NoisyPair],
    val_pairs: &[NoisyPair],
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let init = ModelParams::init(model.clone())?;
    train_with(train_pairs, val_pairs, init, cfg, |_, _| Ok(()))
}

/// Train from `init`, calling `on_epoch` after every epoch with its log line
/// and the current parameters.
pub fn train_with(
    train_pairs: &[NoisyPair],
    val_pairs: &[NoisyPair],
    init: ModelParams<f32>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord, &ModelParams<f32>) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    init.validate()?;
    if train_pairs.is_empty() {
        return Err(Error::empty("training set is empty"));
    }
    let seg_len = train_pairs[0].len();
    if train_pairs.iter().any(|p| p.len() != seg_len) {
        return Err(Error::mismatch("training segments differ in length"));
    }
    let crop = if cfg.crop_length == 0 { seg_len } else { cfg.crop_length };
    if crop > seg_len {
        return Err(Error::invalid(format!(
            "crop of {crop} samples exceeds {seg_len}-sample segments"
        )));
    }
    let inputs: Vec<(Vec<f32>, Vec<f32>)> = train_pairs
        .iter()
        .map(|p| {
            let cast = |s: &[f64]| s.iter().map(|&v| v as f32).collect::<Vec<f32>>();
            (cast(p.mixed.samples()), cast(p.clean.samples()))
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init;
    let mut opt = AdamState::new(&params, cfg.optimizer)?;
    let initial = validation_snr_imp(&params, val_pairs)?;
    let mut best = params.clone();
    let (mut best_score, mut best_epoch) = (initial, 0);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..inputs.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut clipped, mut steps) = (0.0, 0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let mut acc = Gradients::zeros(&params);
            let mut batch_loss = 0.0;
            for &i in chunk {
                let start = rng.random_range(0..=seg_len - crop);
                let (x, y) = &inputs[i];
                let (loss, g) = backward(&x[start..start + crop], &y[start..start + crop], &params)
                    .map_err(|e| match e {
                        Error::NonFinite { op } => Error::non_finite(format!("{op} at epoch {epoch}")),
                        other => other,
                    })?;
                batch_loss += loss;
                acc.add_assign(&g)?;
            }
            acc.scale(1.0 / chunk.len() as f64);
            if clip_global_norm(&mut acc, cfg.clip_norm) {
                clipped += 1;
            }
            adam_step(&mut params, &acc, &mut opt)?;
            loss_sum += batch_loss / chunk.len() as f64;
            steps += 1;
        }
        let train_loss = loss_sum / steps as f64;
        if !train_loss.is_finite() {
            return Err(Error::non_finite(format!("training loss at epoch {epoch}")));
        }
        let score = validation_snr_imp(&params, val_pairs)?;
        let improved = score > best_score;
        if improved {
            best_score = score;
            best_epoch = epoch;
            best = params.clone();
        }
        let rec = EpochRecord {
            epoch,
            steps,
            train_loss,
            val_snr_imp_db: score,
            clipped_steps: clipped,
            best: improved,
        };
        on_epoch(&rec, &params)?;
        log.push(rec);
        if cfg.patience > 0 && epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        best,
        last: params,
        best_epoch,
        best_val_snr_imp_db: best_score,
        initial_val_snr_imp_db: initial,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::mix_at_snr;
    use crate::signal::{Provenance, Signal};

    fn pairs(n: usize, len: usize, seed: u64) -> Vec<NoisyPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let f = rng.random_range(40.0..120.0);
                let clean: Vec<f64> = (0..len)
                    .map(|t| (t as f64 * f / 1000.0 * std::f64::consts::TAU).sin() + rng.random_range(-0.3..0.3))
                    .collect();
                let art: Vec<f64> = (0..len).map(|t| (t as f64 * 0.006).sin()).collect();
                let c = Signal::new(clean, 1000, Provenance::new("t")).unwrap();
                let a = Signal::new(art, 1000, Provenance::new("t")).unwrap();
                mix_at_snr(&c, &a, -5.0).unwrap()
            })
            .collect()
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 2,
            crop_length: 64,
            ..Default::default()
        }
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let (tr, va) = (pairs(4, 128, 1), pairs(2, 128, 2));
        let init = ModelParams::init(ModelConfig::tiny(0)).unwrap();
        let mut cfg = quick();
        cfg.optimizer.lr = 0.0;
        let out = train_with(&tr, &va, init.clone(), &cfg, |_, _| Ok(())).unwrap();
        assert_eq!(out.last, init);
        assert_eq!(out.best, init);
        assert_eq!(out.log.len(), 2);
    }

    #[test]
    fn deterministic_given_seed() {
        let (tr, va) = (pairs(4, 128, 3), pairs(2, 128, 4));
        let run = || train(&tr, &va, &ModelConfig::tiny(5), &quick()).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.last, b.last);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn callback_sees_every_epoch() {
        let (tr, va) = (pairs(3, 100, 5), pairs(1, 100, 6));
        let mut seen = Vec::new();
        train_with(&tr, &va, ModelParams::init(ModelConfig::tiny(1)).unwrap(), &quick(), |r, _| {
            seen.push(r.epoch);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![1, 2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (tr, va) = (pairs(2, 50, 7), pairs(1, 50, 8));
        let m = ModelConfig::tiny(0);
        assert!(train(&[], &va, &m, &quick()).is_err());
        assert!(train(&tr, &[], &m, &quick()).is_err());
        assert!(train(&tr, &va, &m, &TrainConfig { crop_length: 51, ..quick() }).is_err());
        assert!(train(&tr, &va, &m, &TrainConfig { epochs: 0, ..quick() }).is_err());
    }
}
