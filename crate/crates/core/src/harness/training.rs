//! Turning a recorded dataset into a trained checkpoint.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::config::Config;
use super::dataset::Dataset;
use crate::encoders::prepare_input;
use crate::error::{Error, Result};
use crate::fusion::{evaluate, train, Checkpoint, EpochLog, Evaluation, FusionModel, SampleInput, TrainSample};
use crate::reliability::assess;
use crate::rng::SimRng;

const SPLIT_STREAM: u64 = 0x5917;
const SHUFFLE_STREAM: u64 = 0x5bf1;

/// Episode ids used for training and validation; disjoint and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeSplit {
    pub train: Vec<u32>,
    pub validation: Vec<u32>,
}

pub fn split_episodes(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<EpisodeSplit> {
    let episodes: BTreeSet<u32> = dataset.samples.iter().map(|s| s.meta.episode).collect();
    let mut ids: Vec<u32> = episodes.into_iter().collect();
    if ids.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two episodes to split train and validation".into(),
        ));
    }
    SimRng::derive(seed, SPLIT_STREAM).shuffle(&mut ids);
    let n = ((ids.len() as f64 * train_fraction).round() as usize).clamp(1, ids.len() - 1);
    let mut train = ids[..n].to_vec();
    let mut validation = ids[n..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    Ok(EpisodeSplit { train, validation })
}

/// Network inputs for every sample, in dataset order.
pub fn training_samples(dataset: &Dataset, cfg: &Config) -> Result<Vec<TrainSample>> {
    dataset
        .samples
        .iter()
        .map(|s| {
            let rel = assess(&s.observation, &cfg.reliability)?;
            Ok(TrainSample {
                input: SampleInput {
                    encoder: prepare_input(&s.observation, &cfg.encoders)?,
                    r_img: rel.r_img(),
                    r_point: rel.r_point(),
                },
                labels: s.label.probs().to_vec(),
            })
        })
        .collect()
}

/// Control set: label vectors permuted across samples.
pub fn shuffle_labels(samples: &mut [TrainSample], seed: u64) {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    SimRng::derive(seed, SHUFFLE_STREAM).shuffle(&mut order);
    let labels: Vec<Vec<f64>> = order.iter().map(|&i| samples[i].labels.clone()).collect();
    for (s, l) in samples.iter_mut().zip(labels) {
        s.labels = l;
    }
}

pub struct TrainingRun {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub split: EpisodeSplit,
    /// Best model on the validation episodes.
    pub validation: Evaluation,
}

/// Trains on an episode-level split of `samples` (aligned with `dataset`).
pub fn train_on(
    dataset: &Dataset,
    samples: &[TrainSample],
    dataset_sha256: &[u8; 32],
    cfg: &Config,
) -> Result<TrainingRun> {
    let split = split_episodes(dataset, cfg.harness.train_fraction, cfg.harness.seed)?;
    let val_ids: BTreeSet<u32> = split.validation.iter().copied().collect();
    let (mut train_set, mut val_set) = (Vec::new(), Vec::new());
    for (meta, s) in dataset.samples.iter().map(|s| s.meta).zip(samples) {
        if val_ids.contains(&meta.episode) {
            val_set.push(s.clone());
        } else {
            train_set.push(s.clone());
        }
    }
    let model = FusionModel::init(&cfg.fusion_config(), cfg.train.seed)?;
    let outcome = train(model, &train_set, &val_set, &cfg.train)?;
    let validation = evaluate(&outcome.model, &val_set, cfg.harness.accuracy_threshold)?;
    Ok(TrainingRun {
        checkpoint: Checkpoint::new(
            outcome.model,
            cfg.train.clone(),
            outcome.best_epoch,
            hex::encode(dataset_sha256),
        ),
        log: outcome.log,
        split,
        validation,
    })
}

pub fn run_training(dataset: &Dataset, dataset_sha256: &[u8; 32], cfg: &Config) -> Result<TrainingRun> {
    check_dataset(dataset, cfg)?;
    let samples = training_samples(dataset, cfg)?;
    train_on(dataset, &samples, dataset_sha256, cfg)
}

/// Same as [`run_training`] with labels permuted across samples first.
pub fn run_shuffled_control(
    dataset: &Dataset,
    dataset_sha256: &[u8; 32],
    cfg: &Config,
) -> Result<TrainingRun> {
    check_dataset(dataset, cfg)?;
    let mut samples = training_samples(dataset, cfg)?;
    shuffle_labels(&mut samples, cfg.harness.seed);
    train_on(dataset, &samples, dataset_sha256, cfg)
}

fn check_dataset(dataset: &Dataset, cfg: &Config) -> Result<()> {
    let h = &dataset.header;
    if h.horizon != cfg.planner.horizon
        || (h.width, h.height) != (cfg.encoders.image_width, cfg.encoders.image_height)
    {
        return Err(Error::Config(format!(
            "dataset has horizon {} and {}x{} images; config expects {} and {}x{}",
            h.horizon,
            h.width,
            h.height,
            cfg.planner.horizon,
            cfg.encoders.image_width,
            cfg.encoders.image_height
        )));
    }
    if dataset.samples.is_empty() {
        return Err(Error::InvalidInput("dataset has no samples".into()));
    }
    Ok(())
}

pub fn log_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,val_accuracy\n");
    for e in log {
        let _ = writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.val_accuracy);
    }
    out
}
