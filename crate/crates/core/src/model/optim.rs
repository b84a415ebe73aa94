use serde::{Deserialize, Serialize};

use super::{Checkpoint, LayerKind, ModelError};
use crate::dist::LossParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub lr_conv: f64,
    pub lr_dense: f64,
    /// Per-epoch multiplicative decay; the exponent counts epochs of the
    /// current training call.
    pub lr_decay: f64,
    pub momentum: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub freeze_fraction: f64,
    /// Stop once validation EMD is at or below this value.
    pub target_val_emd: Option<f64>,
    pub loss: LossParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Sgd,
            lr_conv: 0.01,
            lr_dense: 0.01,
            lr_decay: 1.0,
            momentum: 0.9,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 50,
            epochs: 10,
            freeze_fraction: 0.0,
            target_val_emd: None,
            loss: LossParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidTrainConfig(msg.to_string()));
        // Zero is allowed so one parameter group can be held fixed.
        if !(self.lr_conv >= 0.0 && self.lr_conv.is_finite()) || !(self.lr_dense >= 0.0 && self.lr_dense.is_finite()) {
            return bad("learning rates must be finite and non-negative");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.freeze_fraction) {
            return bad("freeze_fraction must lie in [0, 1]");
        }
        if self.loss.r != 2.0 {
            return bad("training supports the r = 2 loss only");
        }
        self.loss.validate()?;
        Ok(())
    }

    /// `(lr_conv, lr_dense)` after `epoch` decay steps.
    pub fn learning_rates(&self, epoch: usize) -> (f64, f64) {
        let f = self.lr_decay.powi(epoch as i32);
        (self.lr_conv * f, self.lr_dense * f)
    }
}

/// Per-parameter optimizer memory. Switching optimizers discards it.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum OptimizerState {
    #[default]
    None,
    Sgd {
        velocity: Vec<f64>,
    },
    Adam {
        step: u64,
        m: Vec<f64>,
        v: Vec<f64>,
    },
}

impl Checkpoint {
    fn check_grads(&self, grads: &[f64]) -> Result<(), ModelError> {
        if grads.len() != self.params.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "{} gradients for {} parameters",
                grads.len(),
                self.params.len()
            )));
        }
        Ok(())
    }

    /// Learning rate and parameter range of every trainable layer.
    fn trainable_groups(&self, cfg: &TrainConfig, epoch: usize) -> Vec<(f64, std::ops::Range<usize>)> {
        let (lr_conv, lr_dense) = cfg.learning_rates(epoch);
        self.arch
            .layers
            .iter()
            .zip(&self.frozen)
            .filter(|(_, &frozen)| !frozen)
            .map(|(l, _)| {
                let lr = match l.kind {
                    LayerKind::Conv => lr_conv,
                    LayerKind::Dense => lr_dense,
                };
                (lr, l.range())
            })
            .collect()
    }

    /// Momentum SGD: `v ← μv + g`, `θ ← θ − lr·v`, with `lr` decayed by
    /// `epoch` and chosen per layer group.
    pub fn sgd_step(&mut self, grads: &[f64], cfg: &TrainConfig, epoch: usize) -> Result<(), ModelError> {
        self.check_grads(grads)?;
        let n = self.params.len();
        if !matches!(&self.optimizer, OptimizerState::Sgd { velocity } if velocity.len() == n) {
            self.optimizer = OptimizerState::Sgd { velocity: vec![0.0; n] };
        }
        let groups = self.trainable_groups(cfg, epoch);
        let OptimizerState::Sgd { velocity } = &mut self.optimizer else { unreachable!() };
        for (lr, range) in groups {
            for i in range {
                velocity[i] = cfg.momentum * velocity[i] + grads[i];
                self.params[i] -= lr * velocity[i];
            }
        }
        Ok(())
    }

    /// Bias-corrected Adam. The step counter advances on every call.
    pub fn adam_step(&mut self, grads: &[f64], cfg: &TrainConfig, epoch: usize) -> Result<(), ModelError> {
        self.check_grads(grads)?;
        let n = self.params.len();
        if !matches!(&self.optimizer, OptimizerState::Adam { m, .. } if m.len() == n) {
            self.optimizer = OptimizerState::Adam { step: 0, m: vec![0.0; n], v: vec![0.0; n] };
        }
        let groups = self.trainable_groups(cfg, epoch);
        let OptimizerState::Adam { step, m, v } = &mut self.optimizer else { unreachable!() };
        *step += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powf(*step as f64);
        let c2 = 1.0 - b2.powf(*step as f64);
        for (lr, range) in groups {
            for i in range {
                let g = grads[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                self.params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            }
        }
        Ok(())
    }

    pub fn optimizer_step(&mut self, grads: &[f64], cfg: &TrainConfig, epoch: usize) -> Result<(), ModelError> {
        match cfg.optimizer {
            OptimizerKind::Sgd => self.sgd_step(grads, cfg, epoch),
            OptimizerKind::Adam => self.adam_step(grads, cfg, epoch),
        }
    }
}
