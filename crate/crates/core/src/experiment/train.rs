//! Masked training loop with early stopping on validation MAE.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{NodeMask, TargetVector};
use super::ExperimentError;
use crate::models::{GraphInput, Mode, Model, ModelConfig};
use crate::numerics::{derive_seed, mae, AdamConfig, AdamState, Tape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Mae,
    Mse,
}

fn default_patience() -> usize {
    15
}

fn default_max_epochs() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub weight_decay: f64,
    /// `None` trains full-batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default)]
    pub loss: LossKind,
}

fn default_eps() -> f64 {
    1e-8
}

impl TrainConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            eps: default_eps(),
            weight_decay: 0.0,
            batch_size: None,
            max_epochs: default_max_epochs(),
            patience: default_patience(),
            loss: LossKind::Mae,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::new(self.learning_rate, self.eps, self.weight_decay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once the monitored value fails to improve for `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, value: f64) -> StopDecision {
        if self.best.map_or(true, |b| value < b) {
            self.best = Some(value);
            self.best_epoch = epoch;
            self.since_best = 0;
            return StopDecision::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// MAE on validation nodes; absent when there are none.
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub trace: Vec<EpochRecord>,
}

fn batches(train: &[usize], size: Option<usize>, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    match size {
        None => vec![train.to_vec()],
        Some(b) => {
            let mut order = train.to_vec();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch as u64)));
            order.chunks(b.max(1)).map(<[usize]>::to_vec).collect()
        }
    }
}

/// Trains on train-mask labels only; validation labels drive early stopping, test labels are never read.
pub fn run_training(
    config: &ModelConfig,
    graph: &GraphInput<f64>,
    features: &Arc<Tensor<f64>>,
    targets: &TargetVector,
    train: &TrainConfig,
) -> Result<TrainedModel, ExperimentError> {
    let train_idx = targets.indices(NodeMask::Train);
    if train_idx.is_empty() {
        return Err(ExperimentError::EmptySplit("train"));
    }
    if features.rows() != targets.values.len() {
        return Err(ExperimentError::MaskMismatch(format!(
            "{} feature rows for {} targets",
            features.rows(),
            targets.values.len()
        )));
    }
    let val_idx = targets.indices(NodeMask::Val);
    let val_truth = targets.values_at(&val_idx);

    let mut model = Model::<f64>::init(config.clone())?;
    let mut best_params = model.params.clone();
    let mut adam = AdamState::new(train.adam());
    let mut stopping = EarlyStopping::new(train.patience);
    let mut trace = Vec::new();
    let train_seed = derive_seed(config.seed, 0x7472_6169_6e);

    for epoch in 1..=train.max_epochs {
        let mut loss_sum = 0.0;
        for (b, batch) in batches(&train_idx, train.batch_size, train_seed, epoch).into_iter().enumerate() {
            let tape = Tape::new();
            let bound = model.params.bind(&tape);
            let x = tape.constant(Arc::clone(features));
            let mode = Mode::Train {
                seed: derive_seed(train_seed, ((epoch as u64) << 32) | b as u64),
            };
            let pred = model.forward(&bound, x, graph, &batch, mode)?;
            let truth = targets.values_at(&batch);
            let loss = match train.loss {
                LossKind::Mae => pred.mae_loss(&truth)?,
                LossKind::Mse => pred.mse_loss(&truth)?,
            };
            let value = loss.value().get(0, 0);
            if !value.is_finite() {
                return Err(ExperimentError::Divergence { epoch });
            }
            loss_sum += value * batch.len() as f64;
            let grads = bound.gradients(&tape.backward(loss));
            adam.step(&mut model.params, &grads)?;
        }
        let train_loss = loss_sum / train_idx.len() as f64;

        let val_loss = if val_idx.is_empty() {
            None
        } else {
            let pred = model.predict(features, graph)?;
            let v = mae(&val_idx.iter().map(|&i| pred[i]).collect::<Vec<_>>(), &val_truth)?;
            if !v.is_finite() {
                return Err(ExperimentError::Divergence { epoch });
            }
            Some(v)
        };
        trace.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        match stopping.observe(epoch, val_loss.unwrap_or(train_loss)) {
            StopDecision::Improved => best_params = model.params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    model.params = best_params;
    Ok(TrainedModel {
        model,
        best_epoch: stopping.best_epoch(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_patience_epochs_after_best() {
        let mut s = EarlyStopping::new(15);
        let mut stopped_at = None;
        for epoch in 1..=100 {
            if s.observe(epoch, epoch as f64) == StopDecision::Stop {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(s.best_epoch(), 1);
        assert_eq!(stopped_at, Some(16));
    }

    #[test]
    fn improvement_resets_counter() {
        let mut s = EarlyStopping::new(2);
        assert_eq!(s.observe(1, 5.0), StopDecision::Improved);
        assert_eq!(s.observe(2, 6.0), StopDecision::Continue);
        assert_eq!(s.observe(3, 4.0), StopDecision::Improved);
        assert_eq!(s.observe(4, 4.0), StopDecision::Continue);
        assert_eq!(s.observe(5, 9.0), StopDecision::Stop);
        assert_eq!(s.best(), Some(4.0));
    }

    #[test]
    fn minibatches_cover_train_once() {
        let train: Vec<usize> = (0..150).collect();
        let bs = batches(&train, Some(64), 1, 3);
        assert_eq!(bs.iter().map(Vec::len).collect::<Vec<_>>(), vec![64, 64, 22]);
        let mut all: Vec<usize> = bs.concat();
        all.sort_unstable();
        assert_eq!(all, train);
    }
}
