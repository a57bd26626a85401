//! Weak supervision: pseudo-labels for instance clustering and the losses
//! combining slide-level and instance-level objectives.

mod loss;
mod pseudo;

pub use loss::{cross_entropy, smooth_svm_loss, svm_loss, LossValue};
pub use pseudo::{generate_pseudo_labels, PseudoLabel, PseudoLabelSet};

use crate::error::{ClamError, Result};

/// Loss hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LossConfig {
    /// Margin of the smooth SVM loss.
    pub alpha: f64,
    /// Temperature of the smooth SVM loss.
    pub tau: f64,
    /// Weight of the slide-level loss.
    pub c1: f64,
    /// Weight of the instance-level clustering loss.
    pub c2: f64,
    /// Evidence instances sampled per side and branch (`B`).
    pub sample_size: usize,
    /// Whether evidence of one class excludes every other class in a slide.
    pub mutually_exclusive: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 1.0,
            tau: 1.0,
            c1: 0.7,
            c2: 0.3,
            sample_size: 8,
            mutually_exclusive: true,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(ClamError::config(format!("tau = {} must be > 0", self.tau)));
        }
        if !(self.alpha >= 0.0) {
            return Err(ClamError::config(format!("alpha = {} must be >= 0", self.alpha)));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(ClamError::config("loss weights must be >= 0"));
        }
        if self.sample_size == 0 {
            return Err(ClamError::config("sample size B must be >= 1"));
        }
        Ok(())
    }
}

/// `c1·L_slide + c2·L_patch`, where `L_patch` is the mean of the per-instance
/// clustering losses (zero when nothing was pseudo-labelled).
pub fn total_loss(slide_loss: f64, patch_losses: &[f64], config: &LossConfig) -> f64 {
    let patch = if patch_losses.is_empty() {
        0.0
    } else {
        patch_losses.iter().sum::<f64>() / patch_losses.len() as f64
    };
    config.c1 * slide_loss + config.c2 * patch
}
