use rand::seq::SliceRandom;
use serde::Serialize;

use super::network::{check_input, InputTensor};
use super::{Checkpoint, ModelError, TrainConfig};
use crate::dist::{emd, ScoreDistribution};

/// A network input paired with its ground-truth distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: InputTensor,
    pub gt: ScoreDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    /// Checkpoint epoch counter after this epoch.
    pub epoch: u64,
    /// Mean combined loss over the epoch's mini-batches.
    pub train_loss: f64,
    /// Pure EMD (r = 2) over the training set after the epoch.
    pub train_emd: f64,
    pub val_emd: Option<f64>,
    pub lr_conv: f64,
    pub lr_dense: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub initial_train_emd: f64,
    pub initial_val_emd: Option<f64>,
    pub epochs: Vec<EpochStats>,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn final_val_emd(&self) -> Option<f64> {
        self.epochs.last().map_or(self.initial_val_emd, |e| e.val_emd)
    }
}

/// Mean pure EMD (r = 2) of the model's predictions, in example order.
pub fn mean_emd(ckpt: &Checkpoint, examples: &[Example]) -> Result<Option<f64>, ModelError> {
    if examples.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for ex in examples {
        let pred = ckpt.forward(std::slice::from_ref(&ex.input))?;
        total += emd(&ex.gt, &pred[0], 2.0);
    }
    Ok(Some(total / examples.len() as f64))
}

/// Runs one training stage. The freezing fraction from `cfg` is applied to
/// the checkpoint first; learning-rate decay counts epochs of this stage.
/// `sink` sees every epoch as it completes.
pub fn train(
    ckpt: &mut Checkpoint,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    sink: &mut dyn FnMut(&EpochStats),
) -> Result<TrainReport, ModelError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    for ex in train_set.iter().chain(val_set) {
        check_input(ckpt.config(), &ex.input)?;
    }
    ckpt.freeze(cfg.freeze_fraction);

    let mut report = TrainReport {
        initial_train_emd: mean_emd(ckpt, train_set)?.unwrap_or(0.0),
        initial_val_emd: mean_emd(ckpt, val_set)?,
        epochs: Vec::with_capacity(cfg.epochs),
        stopped_early: false,
    };

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for stage_epoch in 0..cfg.epochs {
        order.shuffle(ckpt.rng_mut());
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<InputTensor> = chunk.iter().map(|&i| train_set[i].input.clone()).collect();
            let gts: Vec<ScoreDistribution> = chunk.iter().map(|&i| train_set[i].gt).collect();
            let (grads, loss) = ckpt.backward(&inputs, &gts, &cfg.loss)?;
            ckpt.optimizer_step(&grads, cfg, stage_epoch)?;
            loss_sum += loss;
            batches += 1;
        }
        ckpt.epoch += 1;

        let (lr_conv, lr_dense) = cfg.learning_rates(stage_epoch);
        let stats = EpochStats {
            epoch: ckpt.epoch,
            train_loss: loss_sum / batches as f64,
            train_emd: mean_emd(ckpt, train_set)?.unwrap_or(0.0),
            val_emd: mean_emd(ckpt, val_set)?,
            lr_conv,
            lr_dense,
        };
        sink(&stats);
        let reached = matches!((cfg.target_val_emd, stats.val_emd), (Some(t), Some(v)) if v <= t);
        report.epochs.push(stats);
        if reached {
            report.stopped_early = stage_epoch + 1 < cfg.epochs;
            break;
        }
    }
    Ok(report)
}
