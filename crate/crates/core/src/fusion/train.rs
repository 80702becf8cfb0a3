//! Mini-batch training with analytic gradients, plus checkpoint I/O.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{bce, bce_grad, FusionModel, SampleInput};
use crate::error::{invalid, Error, Result};
use crate::nn::Parameters;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSample {
    pub input: SampleInput,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 32,
            epochs: 30,
            weight_decay: 1e-4,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(invalid("batch_size and epochs must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(invalid("weight_decay must be non-negative"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.adam_eps > 0.0) {
            return Err(invalid("Adam betas must lie in [0, 1) and eps be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: FusionModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    /// Fraction of horizon steps whose thresholded prediction matches the label.
    pub accuracy: f64,
}

pub fn evaluate(model: &FusionModel, samples: &[TrainSample], threshold: f64) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(invalid("cannot evaluate on an empty set"));
    }
    let mut loss = 0.0;
    let mut hits = 0usize;
    let mut total = 0usize;
    for s in samples {
        let cache = model.forward(&s.input)?;
        loss += bce(cache.probs(), &s.labels)?;
        for (p, y) in cache.probs().iter().zip(&s.labels) {
            hits += ((*p >= threshold) == (*y >= 0.5)) as usize;
            total += 1;
        }
    }
    Ok(Evaluation {
        loss: loss / samples.len() as f64,
        accuracy: hits as f64 / total as f64,
    })
}

/// Mean loss over `batch` and its gradient, accumulated into `grad`.
pub fn batch_gradient(model: &FusionModel, batch: &[&TrainSample], grad: &mut FusionModel) -> Result<f64> {
    grad.zero();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for s in batch {
        let cache = model.forward(&s.input)?;
        total += bce(cache.probs(), &s.labels)?;
        let d: Vec<f64> = bce_grad(cache.probs(), &s.labels)
            .into_iter()
            .map(|g| g * scale)
            .collect();
        model.backward(&s.input, &cache, &d, grad)?;
    }
    Ok(total * scale)
}

struct Optimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Optimizer {
    fn new(kind: OptimizerKind, n: usize) -> Self {
        let state = if kind == OptimizerKind::Adam { n } else { 0 };
        Self {
            kind,
            m: vec![0.0; state],
            v: vec![0.0; state],
            step: 0,
        }
    }

    fn apply(&mut self, model: &mut FusionModel, grad: &FusionModel, cfg: &TrainConfig) {
        let g = grad.flatten();
        self.step += 1;
        let (lr, wd) = (cfg.learning_rate, cfg.weight_decay);
        let kind = self.kind;
        let (m, v) = (&mut self.m, &mut self.v);
        let bias1 = 1.0 - cfg.beta1.powi(self.step);
        let bias2 = 1.0 - cfg.beta2.powi(self.step);
        let mut k = 0;
        model.visit_mut(&mut |tensor| {
            for w in tensor.iter_mut() {
                let gi = g[k] + wd * *w;
                match kind {
                    OptimizerKind::Sgd => *w -= lr * gi,
                    OptimizerKind::Adam => {
                        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gi;
                        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gi * gi;
                        let m_hat = m[k] / bias1;
                        let v_hat = v[k] / bias2;
                        *w -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
                    }
                }
                k += 1;
            }
        });
    }
}

fn has_both_labels(samples: &[TrainSample]) -> bool {
    let mut pos = false;
    let mut neg = false;
    for y in samples.iter().flat_map(|s| &s.labels) {
        pos |= *y >= 0.5;
        neg |= *y < 0.5;
    }
    pos && neg
}

/// Trains `model` in place order-deterministically and returns the best
/// validation checkpoint. Epoch 0 in the log is the untrained model.
pub fn train(
    mut model: FusionModel,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(invalid("training and validation sets must be non-empty"));
    }
    if !has_both_labels(train_set) {
        return Err(invalid("training set needs both positive and negative labels"));
    }
    let horizon = model.horizon();
    if let Some(s) = train_set.iter().chain(val_set).find(|s| s.labels.len() != horizon) {
        return Err(Error::Shape(format!(
            "sample has {} labels, model horizon is {horizon}",
            s.labels.len()
        )));
    }
    let mut rng = SimRng::derive(cfg.seed, 0x7a1);
    let mut grad = model.zeros_like();
    let mut opt = Optimizer::new(cfg.optimizer, model.num_params());
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let start_train = evaluate(&model, train_set, 0.5)?;
    let start_val = evaluate(&model, val_set, 0.5)?;
    let mut log = vec![EpochLog {
        epoch: 0,
        train_loss: start_train.loss,
        val_loss: start_val.loss,
        val_accuracy: start_val.accuracy,
    }];
    let mut best = (start_val.loss, 0, model.clone());

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut running = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainSample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let l = batch_gradient(&model, &batch, &mut grad)?;
            if !l.is_finite() || !grad.all_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("batch loss {l}"),
                });
            }
            running += l * chunk.len() as f64;
            opt.apply(&mut model, &grad, cfg);
            if !model.all_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: "non-finite parameters".into(),
                });
            }
        }
        let val = evaluate(&model, val_set, 0.5)?;
        if !val.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("validation loss {}", val.loss),
            });
        }
        log.push(EpochLog {
            epoch,
            train_loss: running / train_set.len() as f64,
            val_loss: val.loss,
            val_accuracy: val.accuracy,
        });
        if val.loss < best.0 {
            best = (val.loss, epoch, model.clone());
        }
    }
    Ok(TrainOutcome {
        model: best.2,
        best_epoch: best.1,
        log,
    })
}

pub const CHECKPOINT_FORMAT: &str = "trav-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dataset_sha256: String,
    pub train: TrainConfig,
    pub best_epoch: usize,
    pub model: FusionModel,
}

impl Checkpoint {
    pub fn new(model: FusionModel, train: TrainConfig, best_epoch: usize, dataset_sha256: String) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dataset_sha256,
            train,
            best_epoch,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                c.format, c.version
            )));
        }
        c.model.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
