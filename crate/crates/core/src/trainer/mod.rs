//! Mini-batch training, evaluation, and the ablation harness.

mod ablation;
mod report;

pub use ablation::{
    relative_percent, run_ablation, run_ablation_with_progress, sample_std, threads_from_env,
    AblationEntry, AblationGrid, AblationReport, AblationSetup, ConfigResult, RunRecord,
};
pub use report::{emit_report, parse_report_csv, ReportFormat};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{augment_flip, augment_noise, Dataset};
use crate::model::Autoencoder;
use crate::neuralcore::{Batch3, BnMode};
use crate::optim::{adam_step, batch_loss, rmsle, AdamConfig, AdamState, LossKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds shuffling and augmentation.
    pub seed: u64,
    pub adam: AdamConfig,
    /// Standard deviation in meters of the Gaussian noise added to laser scans.
    pub noise_sigma: f64,
    /// Randomly mirror each pair.
    pub flip: bool,
    pub shuffle: bool,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    /// Desk-scale defaults: 200 epochs of batches of 32.
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            seed: 0,
            adam: AdamConfig::default(),
            noise_sigma: 0.02,
            flip: true,
            shuffle: true,
            loss: LossKind::Rmsle,
        }
    }
}

impl TrainConfig {
    /// The long-run profile: 2000 epochs.
    pub fn full_length() -> Self {
        TrainConfig {
            epochs: 2000,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "batch_size must be at least 2 for batch statistics, got {}",
                self.batch_size
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        self.adam.validate()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Seconds since training started.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Mean training loss of every epoch.
    pub losses: Vec<f64>,
    pub steps: u64,
}

/// Start indices and lengths of the batches of one epoch. A trailing batch
/// of one sample is dropped because batch statistics need two.
pub fn batch_bounds(n: usize, batch_size: usize) -> Vec<(usize, usize)> {
    (0..n)
        .step_by(batch_size)
        .map(|start| (start, batch_size.min(n - start)))
        .filter(|&(_, len)| len >= 2)
        .collect()
}

pub fn train(model: &mut Autoencoder, data: &Dataset, cfg: &TrainConfig) -> Result<TrainHistory> {
    train_with_log(model, data, cfg, |_| {})
}

/// Trains `model` in place, calling `on_epoch` after every epoch.
pub fn train_with_log(
    model: &mut Autoencoder,
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainHistory> {
    cfg.validate()?;
    let mc = model.config().clone();
    data.check_compatible(mc.n_points, mc.max_range)?;
    if data.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "training needs at least 2 pairs, got {}",
            data.len()
        )));
    }
    let bounds = batch_bounds(data.len(), cfg.batch_size);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(cfg.adam, model.params().iter().map(|(_, p)| p.len()))?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = TrainHistory {
        losses: Vec::with_capacity(cfg.epochs),
        steps: 0,
    };
    let start = Instant::now();
    model.set_mode(BnMode::Train);
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        let mut seen = 0;
        for (batch, &(first, len)) in bounds.iter().enumerate() {
            let mut xs = Vec::with_capacity(len);
            let mut ys = Vec::with_capacity(len);
            for &i in &order[first..first + len] {
                let pair = &data.pairs[i];
                let pair = if cfg.flip {
                    augment_flip(pair, &mut rng)
                } else {
                    pair.clone()
                };
                xs.push(augment_noise(
                    &pair.x,
                    cfg.noise_sigma,
                    mc.max_range,
                    &mut rng,
                )?);
                ys.push(pair.y);
            }
            let x = Batch3::from_scans(&xs)?;
            let y = Batch3::from_scans(&ys)?;
            let (pred, cache) = model.forward(&x)?;
            let (loss, grad) = batch_loss(cfg.loss, &pred, &y)?;
            let grads = model.backward(&cache, &grad)?;
            if !loss.is_finite() || !grads.all_finite() {
                let norms: Vec<String> = grads
                    .names()
                    .iter()
                    .enumerate()
                    .map(|(i, name)| format!("{name}={:.3e}", grads.norm(i)))
                    .collect();
                model.set_mode(BnMode::Eval);
                return Err(Error::Numerical {
                    epoch,
                    batch,
                    reason: format!("loss {loss}; gradient norms {}", norms.join(", ")),
                });
            }
            adam_step(&mut model.params_mut(), &grads, &mut adam)?;
            history.steps += 1;
            total += loss * len as f64;
            seen += len;
        }
        let loss = total / seen as f64;
        history.losses.push(loss);
        on_epoch(&EpochLog {
            epoch,
            loss,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    model.set_mode(BnMode::Eval);
    Ok(history)
}

/// Anything that maps a `(B, 1, N)` batch of laser scans to predicted
/// obstacle distances without changing its own state.
pub trait Predictor {
    fn predict_batch(&self, x: &Batch3) -> Result<Batch3>;
}

impl Predictor for Autoencoder {
    fn predict_batch(&self, x: &Batch3) -> Result<Batch3> {
        self.predict(x)
    }
}

const EVAL_CHUNK: usize = 256;

/// Mean per-pair RMSLE with batch statistics frozen and no augmentation.
pub fn evaluate(model: &impl Predictor, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let mut total = 0.0;
    for chunk in data.pairs.chunks(EVAL_CHUNK) {
        let xs: Vec<&[f64]> = chunk.iter().map(|p| p.x.as_slice()).collect();
        let pred = model.predict_batch(&Batch3::from_scans(&xs)?)?;
        for (b, pair) in chunk.iter().enumerate() {
            total += rmsle(pred.sample(b), &pair.y)?;
        }
    }
    Ok(total / data.len() as f64)
}
