use crate::error::{ClamError, Result};
use crate::weak::LossConfig;

/// Moment constants for Adam.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimization settings. Batches are always a single bag.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// L2 penalty added to every gradient as `weight_decay·θ`.
    pub weight_decay: f64,
    pub min_epochs: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            weight_decay: 1e-5,
            min_epochs: 50,
            max_epochs: 200,
            patience: 20,
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ClamError::config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(ClamError::config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.min_epochs > self.max_epochs || self.max_epochs == 0 {
            return Err(ClamError::config(format!(
                "need 1 ≤ max_epochs and min_epochs ≤ max_epochs, got {}..{}",
                self.min_epochs, self.max_epochs
            )));
        }
        if self.patience == 0 {
            return Err(ClamError::config("patience must be at least 1"));
        }
        let a = self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return Err(ClamError::config(format!("invalid Adam constants {a:?}")));
        }
        self.loss.validate()
    }
}
