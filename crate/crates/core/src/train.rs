//! Losses, metrics, the training loop and naive reference forecasts.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Split, Window, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, ModelParams};
use crate::numerics::{adam_step, AdamState};

/// Mean squared error over every element.
pub fn loss_mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::dim("loss_mse", &[target.len()], &[pred.len()]));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(s / pred.len() as f64)
}

/// Mean absolute error over every element.
pub fn metric_mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::dim("metric_mae", &[target.len()], &[pred.len()]));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum();
    Ok(s / pred.len() as f64)
}

/// Optimisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Global L2 norm clip on the gradient.
    pub grad_clip: Option<f64>,
    /// Hard cap on optimiser steps across all epochs.
    pub max_steps: Option<usize>,
    pub eval_batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            batch_size: 32,
            max_epochs: 10,
            patience: 3,
            seed: 2024,
            grad_clip: None,
            max_steps: None,
            eval_batch_size: 256,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 || self.eval_batch_size == 0 {
            return Err(Error::Config("batch sizes must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("grad_clip must be positive, got {c}")));
            }
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.max_steps == Some(0) {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 of any serialisable configuration.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serialises");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Metrics for one evaluated split, plus enough provenance to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub version: String,
    pub dataset: String,
    pub split: Split,
    pub variant: String,
    pub lookback: usize,
    pub horizon: usize,
    pub windows: usize,
    pub mse: f64,
    pub mae: f64,
    pub baselines: Option<Baselines>,
    pub config_hash: String,
    pub seed: u64,
    pub epochs_run: usize,
    pub steps_run: usize,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
}

impl ForecastReport {
    /// Checks the metric invariants every report must satisfy.
    pub fn check(&self) -> Result<()> {
        if !(self.mse.is_finite() && self.mae.is_finite() && self.mse >= 0.0 && self.mae >= 0.0) {
            return Err(Error::Contract(format!(
                "non-finite or negative metrics: mse={}, mae={}",
                self.mse, self.mae
            )));
        }
        if self.mae * self.mae > self.mse * (1.0 + 1e-9) + 1e-15 {
            return Err(Error::Contract(format!(
                "mae^2 ({}) exceeds mse ({})",
                self.mae * self.mae,
                self.mse
            )));
        }
        Ok(())
    }
}

/// Running sums for split-level metrics.
#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    sse: f64,
    sae: f64,
    n: usize,
}

impl Accum {
    fn add(&mut self, pred: &[f64], target: &[f64]) {
        for (p, t) in pred.iter().zip(target) {
            let e = p - t;
            self.sse += e * e;
            self.sae += e.abs();
        }
        self.n += pred.len();
    }

    fn mse(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sse / self.n as f64
        }
    }

    fn mae(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sae / self.n as f64
        }
    }
}

/// MSE and MAE on a split, in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub mse: f64,
    pub mae: f64,
    pub windows: usize,
}

fn batch_tensors<'a>(batch: &[Window<'a>]) -> (Vec<&'a [f64]>, Vec<f64>) {
    let xs = batch.iter().map(|w| w.x).collect();
    let ys = batch.iter().flat_map(|w| w.y.iter().copied()).collect();
    (xs, ys)
}

/// Chronological evaluation of `model` on `split`.
pub fn evaluate_model(
    model: &Model,
    dataset: &WindowedDataset,
    split: Split,
    batch_size: usize,
) -> Result<SplitMetrics> {
    check_geometry(&model.config, dataset)?;
    let mut acc = Accum::default();
    let mut windows = 0;
    for batch in dataset.window_iter(split, batch_size, 0) {
        let (xs, ys) = batch_tensors(&batch);
        let cache = model.forward_batch(&xs)?;
        acc.add(cache.predictions(), &ys);
        windows += batch.len();
    }
    Ok(SplitMetrics {
        mse: acc.mse(),
        mae: acc.mae(),
        windows,
    })
}

/// One forecast horizon for one window, for export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub window_id: usize,
    pub channel: usize,
    #[serde(skip)]
    pub t0: usize,
    pub step: usize,
    pub y_true: f64,
    pub y_pred: f64,
}

pub fn predict_split(
    model: &Model,
    dataset: &WindowedDataset,
    split: Split,
    batch_size: usize,
) -> Result<Vec<PredictionRow>> {
    check_geometry(&model.config, dataset)?;
    let t = dataset.horizon;
    let mut rows = Vec::with_capacity(dataset.num_windows(split) * t);
    let mut id = 0;
    for batch in dataset.window_iter(split, batch_size, 0) {
        let (xs, _) = batch_tensors(&batch);
        let cache = model.forward_batch(&xs)?;
        for (w, pred) in batch.iter().zip(cache.predictions().chunks_exact(t)) {
            for (step, (&y_true, &y_pred)) in w.y.iter().zip(pred).enumerate() {
                rows.push(PredictionRow {
                    window_id: id,
                    channel: w.channel,
                    t0: w.t0,
                    step,
                    y_true,
                    y_pred,
                });
            }
            id += 1;
        }
    }
    Ok(rows)
}

/// Persistence (repeat the last lookback value) and lookback-mean forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub persistence: SplitMetrics,
    pub mean: SplitMetrics,
}

pub fn naive_baselines(dataset: &WindowedDataset, split: Split) -> Baselines {
    let mut last = Accum::default();
    let mut mean = Accum::default();
    let t = dataset.horizon;
    let mut pred = vec![0.0; t];
    for &r in &dataset.windows(split) {
        let w = dataset.window(r);
        pred.fill(*w.x.last().expect("lookback is non-empty"));
        last.add(&pred, w.y);
        pred.fill(w.x.iter().sum::<f64>() / w.x.len() as f64);
        mean.add(&pred, w.y);
    }
    let windows = dataset.num_windows(split);
    Baselines {
        persistence: SplitMetrics {
            mse: last.mse(),
            mae: last.mae(),
            windows,
        },
        mean: SplitMetrics {
            mse: mean.mse(),
            mae: mean.mae(),
            windows,
        },
    }
}

/// Per-epoch training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse: f64,
    pub steps: usize,
}

/// Result of [`train_model`]: the best-validation model and its history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochLog>,
    pub best_val_mse: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub steps_run: usize,
    pub wall_time_s: f64,
}

fn check_geometry(config: &ModelConfig, dataset: &WindowedDataset) -> Result<()> {
    if config.lookback != dataset.lookback || config.horizon != dataset.horizon {
        return Err(Error::Config(format!(
            "model expects lookback {} / horizon {}, dataset has {} / {}",
            config.lookback, config.horizon, dataset.lookback, dataset.horizon
        )));
    }
    Ok(())
}

fn clip_gradients(grads: &mut ModelParams, max_norm: f64) {
    let norm = grads.l2_norm();
    if norm > max_norm {
        let s = max_norm / norm;
        for t in grads.tensors_mut() {
            t.data_mut().iter_mut().for_each(|g| *g *= s);
        }
    }
}

/// One Adam update on a single batch; returns the batch loss before the step.
pub fn train_step(
    model: &mut Model,
    adam: &mut AdamState,
    inputs: &[&[f64]],
    targets: &[f64],
    grad_clip: Option<f64>,
) -> Result<f64> {
    let cache = model.forward_batch(inputs)?;
    let pred = cache.predictions();
    let loss = loss_mse(pred, targets)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            batch: adam.step_count as usize,
            loss,
        });
    }
    let scale = 2.0 / pred.len() as f64;
    let d_pred: Vec<f64> = pred.iter().zip(targets).map(|(p, t)| scale * (p - t)).collect();
    let mut grads = model.backward(&cache, &d_pred);
    if !grads.is_finite() {
        return Err(Error::NonFiniteLoss {
            batch: adam.step_count as usize,
            loss,
        });
    }
    if let Some(c) = grad_clip {
        clip_gradients(&mut grads, c);
    }
    model.params.load_grads(&grads)?;
    adam_step(&mut model.params.tensors_mut(), adam)?;
    Ok(loss)
}

/// Adam with early stopping on validation MSE. The returned model carries
/// the parameters of the best validation epoch.
pub fn train_model(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    dataset: &WindowedDataset,
) -> Result<TrainOutcome> {
    train_model_with(model_config, train_config, dataset, |_| {})
}

/// As [`train_model`], calling `on_epoch` after every epoch.
pub fn train_model_with<F: FnMut(&EpochLog)>(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    dataset: &WindowedDataset,
    mut on_epoch: F,
) -> Result<TrainOutcome> {
    train_config.validate()?;
    check_geometry(model_config, dataset)?;
    let start = Instant::now();
    let mut model = Model::new(model_config.clone())?;
    let mut adam = AdamState::new(train_config.lr);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut steps = 0;
    let step_cap = train_config.max_steps.unwrap_or(usize::MAX);

    for epoch in 0..train_config.max_epochs {
        let shuffle_seed = train_config
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(epoch as u64);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for batch in dataset.window_iter(Split::Train, train_config.batch_size, shuffle_seed) {
            let (xs, ys) = batch_tensors(&batch);
            loss_sum += train_step(&mut model, &mut adam, &xs, &ys, train_config.grad_clip)?;
            batches += 1;
            steps += 1;
            if steps >= step_cap {
                break;
            }
        }
        let val = evaluate_model(&model, dataset, Split::Val, train_config.eval_batch_size)?;
        let log = EpochLog {
            epoch,
            train_loss: loss_sum / batches.max(1) as f64,
            val_mse: val.mse,
            steps,
        };
        on_epoch(&log);
        history.push(log);
        if !val.mse.is_finite() {
            return Err(Error::NonFiniteLoss {
                batch: steps,
                loss: val.mse,
            });
        }
        if best.as_ref().map_or(true, |(b, _, _)| val.mse < *b) {
            best = Some((val.mse, epoch, model.params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= train_config.patience || steps >= step_cap {
            break;
        }
    }

    let (best_val_mse, best_epoch, params) = best.expect("at least one epoch runs");
    let model = Model::with_params(model_config.clone(), params)?;
    Ok(TrainOutcome {
        model,
        epochs_run: history.len(),
        history,
        best_val_mse,
        best_epoch,
        steps_run: steps,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
