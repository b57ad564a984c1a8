//! Masked training: data preparation, the multi-task loss, AdamW with a
//! warmup / linear-decay schedule, per-epoch validation and checkpoints.
//!
//! Every random draw comes from a keyed stream (see [`crate::rng`]): epoch
//! shuffles from `(seed, epoch)`, training masks from `(seed, epoch, index)`,
//! dropout from `(seed, step, micro-batch)` and validation masks from
//! `(seed, epoch)`. Resuming from a checkpoint therefore replays the same
//! trajectory as an uninterrupted run.

pub mod checkpoint;
pub mod loss;
pub mod optim;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{Checkpoint, CheckpointError, CheckpointHeader};
pub use loss::{
    magnitude_loss, masked_loss, masked_loss_sums, modulo_loss, sign_loss, LossBreakdown, LossSums, LossWeights,
};
pub use optim::{clip_grad_norm, lr_at, AdamW, AdamWConfig};

use crate::analytics::MaskedMetrics;
use crate::corpus::{bucket_of, truncate_prefix, SequenceRecord};
use crate::featurizer::{mask_encoded, EncodedSequence, MaskedSample, TermTargets};
use crate::model::{Mode, Model, PackedBatch};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub grad_accum: usize,
    pub lr: f64,
    pub warmup_frac: f64,
    pub weight_decay: f64,
    pub mask_p: f64,
    pub seed: u64,
    pub w_mag: f64,
    pub w_sign: f64,
    pub w_mod: f64,
    pub huber_delta: f64,
    /// Global gradient-norm clip; off when `None`.
    pub grad_clip: Option<f64>,
    /// Write a checkpoint every this many epochs (and always at the end).
    pub checkpoint_every: Option<usize>,
    /// Sequences per validation forward pass.
    pub eval_batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            grad_accum: 2,
            lr: 5e-5,
            warmup_frac: 0.10,
            weight_decay: 0.01,
            mask_p: 0.15,
            seed: 42,
            w_mag: 1.0,
            w_sign: 1.0,
            w_mod: 2.0,
            huber_delta: 1.0,
            grad_clip: None,
            checkpoint_every: None,
            eval_batch_size: 64,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("warmup_frac must be in (0, 1), got {0}")]
    Warmup(f64),
    #[error("mask_p must be in (0, 1], got {0}")]
    MaskP(f64),
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ints = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("grad_accum", self.grad_accum),
            ("eval_batch_size", self.eval_batch_size),
        ];
        for (name, v) in ints {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        let reals = [
            ("lr", self.lr),
            ("w_mag", self.w_mag),
            ("w_sign", self.w_sign),
            ("w_mod", self.w_mod),
            ("huber_delta", self.huber_delta),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !(self.weight_decay >= 0.0) {
            return Err(ConfigError::NotPositive("weight_decay"));
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(ConfigError::NotPositive("grad_clip"));
        }
        if self.checkpoint_every == Some(0) {
            return Err(ConfigError::NotPositive("checkpoint_every"));
        }
        if !(self.warmup_frac > 0.0 && self.warmup_frac < 1.0) {
            return Err(ConfigError::Warmup(self.warmup_frac));
        }
        if !(self.mask_p > 0.0 && self.mask_p <= 1.0) {
            return Err(ConfigError::MaskP(self.mask_p));
        }
        Ok(())
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights { mag: self.w_mag, sign: self.w_sign, modulo: self.w_mod }
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig { weight_decay: self.weight_decay, ..AdamWConfig::default() }
    }

    /// Sequences per optimizer update.
    pub fn effective_batch(&self) -> usize {
        self.batch_size * self.grad_accum
    }

    pub fn steps_per_epoch(&self, n_train: usize) -> u64 {
        n_train.div_ceil(self.effective_batch()) as u64
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("non-finite loss at epoch {epoch}, step {step}, batch {batch} (sequences {ids:?}): {breakdown:?}")]
    NonFinite { epoch: usize, step: u64, batch: usize, ids: Vec<String>, breakdown: LossBreakdown },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{0}")]
    Observer(String),
}

/// Encoded sequences with their identifiers, in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub items: Vec<Arc<EncodedSequence>>,
}

impl Dataset {
    /// Encodes the first `max_len` terms of each record.
    pub fn from_records(records: &[SequenceRecord], max_len: usize) -> Self {
        use rayon::prelude::*;
        let items = records
            .par_iter()
            .map(|r| Arc::new(EncodedSequence::new(truncate_prefix(r, max_len))))
            .collect();
        Self { ids: records.iter().map(|r| r.id.clone()).collect(), items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Deterministic masks keyed by `(seed, purpose, a, index)`.
    pub fn masked(&self, mask_p: f64, seed: u64, purpose: Purpose, a: u64) -> Vec<MaskedSample> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, enc)| mask_encoded(enc.clone(), mask_p, &mut rng::stream(seed, purpose, a, i as u64)))
            .collect()
    }
}

/// Loss and metrics of one validation pass.
#[derive(Debug, Clone, Default)]
pub struct Validation {
    pub loss: LossBreakdown,
    pub metrics: MaskedMetrics,
}

/// Evaluates loss and masked metrics on `samples` without dropout.
pub fn evaluate_samples(
    model: &Model<f32>,
    samples: &[MaskedSample],
    config: &TrainConfig,
) -> Validation {
    let weights = config.loss_weights();
    let mut sums = LossSums::default();
    let mut metrics = MaskedMetrics::default();
    for chunk in samples.chunks(config.eval_batch_size) {
        let batch = PackedBatch::<f32>::from_samples(chunk);
        let rows = batch.masked_rows();
        let (pred, _) = model.forward(&batch, &rows, Mode::Eval);
        let targets = row_targets(chunk);
        sums.add(&masked_loss_sums(&pred, &targets, &weights, config.huber_delta));
        let mut k = 0;
        for s in chunk {
            for i in s.masked_positions() {
                metrics.add(&pred.position(k), &s.encoded.targets[i], bucket_of(&s.encoded.terms[i]));
                k += 1;
            }
        }
    }
    Validation { loss: sums.breakdown(&weights), metrics }
}

/// Targets of the masked rows of `samples`, in packed-row order.
pub fn row_targets(samples: &[MaskedSample]) -> Vec<&TermTargets> {
    samples.iter().flat_map(|s| s.masked_positions().map(move |i| &s.encoded.targets[i])).collect()
}

/// Losses of one optimizer update.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: u64,
    pub lr: f64,
    pub loss: LossBreakdown,
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub step: u64,
    pub lr: f64,
    pub train: LossBreakdown,
    pub val: Option<LossBreakdown>,
    pub val_mag_acc: Option<f64>,
    pub val_sign_acc: Option<f64>,
    pub val_mma: Option<f64>,
}

/// Callbacks during [`Trainer::fit`].
pub trait TrainObserver {
    fn on_step(&mut self, _record: &StepRecord) -> Result<(), TrainError> {
        Ok(())
    }

    /// Called after every epoch; `checkpoint_due` follows `checkpoint_every`
    /// and is always true after the last epoch.
    fn on_epoch(&mut self, _record: &EpochRecord, _trainer: &Trainer, _checkpoint_due: bool) -> Result<(), TrainError> {
        Ok(())
    }
}

impl TrainObserver for () {}

/// Collects every record in memory.
#[derive(Debug, Default)]
pub struct Recorder {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
}

impl TrainObserver for Recorder {
    fn on_step(&mut self, record: &StepRecord) -> Result<(), TrainError> {
        self.steps.push(record.clone());
        Ok(())
    }

    fn on_epoch(&mut self, record: &EpochRecord, _: &Trainer, _: bool) -> Result<(), TrainError> {
        self.epochs.push(record.clone());
        Ok(())
    }
}

pub struct Trainer {
    pub model: Model<f32>,
    pub optim: AdamW<f32>,
    pub config: TrainConfig,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed updates.
    pub step: u64,
    grads: crate::model::ParamStore<f32>,
}

impl Trainer {
    pub fn new(model: Model<f32>, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let optim = AdamW::new(config.adamw(), &model.params);
        let grads = model.params.zeros_like();
        Ok(Self { model, optim, config, epoch: 0, step: 0, grads })
    }

    /// Restores model, optimizer moments and counters. The training
    /// configuration stored in the checkpoint is used unless `config` is given.
    pub fn from_checkpoint(ck: &Checkpoint, config: Option<TrainConfig>) -> Result<Self, TrainError> {
        let config = config.or_else(|| ck.header.train.clone()).unwrap_or_default();
        config.validate()?;
        let model = ck.model()?;
        let optim = ck.optimizer(config.adamw()).unwrap_or_else(|| AdamW::new(config.adamw(), &model.params));
        let grads = model.params.zeros_like();
        Ok(Self { model, optim, config, epoch: ck.header.epoch, step: ck.header.step, grads })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::from_model(&self.model);
        ck.header.train = Some(self.config.clone());
        ck.header.epoch = self.epoch;
        ck.header.step = self.step;
        ck.header.has_moments = true;
        ck.moments = Some((self.optim.m.clone(), self.optim.v.clone()));
        ck
    }

    pub fn total_steps(&self, n_train: usize) -> u64 {
        self.config.steps_per_epoch(n_train) * self.config.epochs as u64
    }

    /// One optimizer update over `micro_batches`; the loss of every
    /// micro-batch is normalised by the masked count of all of them, so the
    /// update equals one over their concatenation.
    pub fn train_step(&mut self, micro_batches: &[&[MaskedSample]], lr: f64) -> LossBreakdown {
        let weights = self.config.loss_weights();
        let n_total: usize = micro_batches.iter().flat_map(|mb| mb.iter()).map(MaskedSample::masked_count).sum();
        let scale = 1.0 / n_total.max(1) as f64;
        self.grads.fill_zero();
        let mut sums = LossSums::default();
        for (mi, mb) in micro_batches.iter().enumerate() {
            let batch = PackedBatch::<f32>::from_samples(mb);
            let rows = batch.masked_rows();
            let mut dropout_rng = rng::stream(self.config.seed, Purpose::Dropout, self.step, mi as u64);
            let (pred, cache) = self.model.forward(&batch, &rows, Mode::Train(&mut dropout_rng));
            let targets = row_targets(mb);
            let (s, d_pred) = masked_loss(&pred, &targets, &weights, self.config.huber_delta, Some(scale));
            self.model.backward(&batch, &cache, &d_pred.expect("gradient requested"), &mut self.grads);
            sums.add(&s);
        }
        let breakdown = sums.breakdown(&weights);
        if breakdown.is_finite() && self.grads.all_finite() {
            if let Some(c) = self.config.grad_clip {
                clip_grad_norm(&mut self.grads, c);
            }
            self.optim.update(&mut self.model.params, &self.grads, lr);
        }
        self.step += 1;
        breakdown
    }

    /// Trains epochs `self.epoch..config.epochs`, validating on `val` (when
    /// non-empty) after each epoch.
    pub fn fit(&mut self, train: &Dataset, val: &Dataset, observer: &mut dyn TrainObserver) -> Result<(), TrainError> {
        if train.is_empty() {
            return Err(TrainError::EmptyTrainingSet);
        }
        let total = self.total_steps(train.len());
        let cfg = self.config.clone();
        while self.epoch < cfg.epochs {
            let epoch = self.epoch;
            let mut order: Vec<usize> = (0..train.len()).collect();
            rng::fisher_yates(&mut order, &mut rng::stream(cfg.seed, Purpose::Shuffle, epoch as u64, 0));
            let mut epoch_sums = (0.0, 0.0, 0.0, 0.0, 0usize);
            let mut lr = 0.0;
            for (batch_idx, chunk) in order.chunks(cfg.effective_batch()).enumerate() {
                let samples: Vec<MaskedSample> = chunk
                    .iter()
                    .map(|&i| {
                        let mut r = rng::stream(cfg.seed, Purpose::TrainMask, epoch as u64, i as u64);
                        mask_encoded(train.items[i].clone(), cfg.mask_p, &mut r)
                    })
                    .collect();
                let micro: Vec<&[MaskedSample]> = samples.chunks(cfg.batch_size).collect();
                lr = lr_at(self.step, total, cfg.lr, cfg.warmup_frac);
                let step = self.step;
                let loss = self.train_step(&micro, lr);
                if !loss.is_finite() || !self.grads.all_finite() {
                    self.step = step;
                    return Err(TrainError::NonFinite {
                        epoch,
                        step,
                        batch: batch_idx,
                        ids: chunk.iter().map(|&i| train.ids[i].clone()).collect(),
                        breakdown: loss,
                    });
                }
                let n = loss.masked_count as f64;
                epoch_sums.0 += loss.total * n;
                epoch_sums.1 += loss.mag * n;
                epoch_sums.2 += loss.sign * n;
                epoch_sums.3 += loss.modulo * n;
                epoch_sums.4 += loss.masked_count;
                observer.on_step(&StepRecord { epoch, step, lr, loss })?;
            }
            self.epoch += 1;
            let n = epoch_sums.4.max(1) as f64;
            let train_loss = LossBreakdown {
                total: epoch_sums.0 / n,
                mag: epoch_sums.1 / n,
                sign: epoch_sums.2 / n,
                modulo: epoch_sums.3 / n,
                masked_count: epoch_sums.4,
            };
            let validation = (!val.is_empty()).then(|| self.validate(val, epoch));
            let record = EpochRecord {
                epoch,
                step: self.step,
                lr,
                train: train_loss,
                val: validation.as_ref().map(|v| v.loss),
                val_mag_acc: validation.as_ref().map(|v| v.metrics.mag_acc()),
                val_sign_acc: validation.as_ref().map(|v| v.metrics.sign_acc()),
                val_mma: validation.as_ref().map(|v| v.metrics.mma()),
            };
            let due = self.epoch == cfg.epochs || cfg.checkpoint_every.is_some_and(|k| self.epoch.is_multiple_of(k));
            observer.on_epoch(&record, self, due)?;
        }
        Ok(())
    }

    /// Validation with masks keyed by `(seed, epoch)`.
    pub fn validate(&self, val: &Dataset, epoch: usize) -> Validation {
        let samples = val.masked(self.config.mask_p, self.config.seed, Purpose::EvalMask, epoch as u64);
        evaluate_samples(&self.model, &samples, &self.config)
    }
}
