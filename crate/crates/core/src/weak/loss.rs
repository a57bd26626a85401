use crate::error::{ClamError, Result};
use crate::numerics::{log_sum_exp, softmax_unchecked};

/// A loss value together with its gradient with respect to the scores.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

fn check_target(scores: &[f64], y: usize) -> Result<()> {
    if y >= scores.len() {
        return Err(ClamError::Label(format!("target {y} outside 0..{}", scores.len())));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(ClamError::Numeric("scores contain NaN or infinity".into()));
    }
    Ok(())
}

/// Multiclass hinge loss `max(max_{j≠y}(s_j + α) − s_y, 0)`.
pub fn svm_loss(scores: &[f64], y: usize, alpha: f64) -> Result<f64> {
    check_target(scores, y)?;
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, &s)| s + alpha)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((runner_up - scores[y]).max(0.0))
}

/// Temperature-smoothed top-1 SVM loss
/// `τ · log Σ_j exp((α·[j≠y] + s_j − s_y) / τ)`.
///
/// With `q = softmax(z)` over the scaled margins `z`, the gradient is
/// `q − onehot(y)`.
pub fn smooth_svm_loss(scores: &[f64], y: usize, alpha: f64, tau: f64) -> Result<LossValue> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(ClamError::config(format!("temperature {tau} must be positive")));
    }
    check_target(scores, y)?;
    let sy = scores[y];
    let z: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let margin = if j == y { 0.0 } else { alpha };
            (margin + s - sy) / tau
        })
        .collect();
    let value = tau * log_sum_exp(&z);
    let mut grad = softmax_unchecked(&z);
    grad[y] -= 1.0;
    Ok(LossValue { value, grad })
}

/// `−log softmax(s)_y` with gradient `softmax(s) − onehot(y)`.
pub fn cross_entropy(logits: &[f64], y: usize) -> Result<LossValue> {
    check_target(logits, y)?;
    let value = log_sum_exp(logits) - logits[y];
    let mut grad = softmax_unchecked(logits);
    grad[y] -= 1.0;
    Ok(LossValue { value, grad })
}
