use crate::error::{ClamError, Result};
use crate::params::ParamSet;

use super::config::AdamConfig;

/// First and second moment estimates, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<P> {
    pub first_moment: P,
    pub second_moment: P,
    pub step: u64,
    pub config: AdamConfig,
}

impl<P: ParamSet> OptimizerState<P> {
    pub fn new(params: &P, config: AdamConfig) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update with L2 decay folded into the gradient:
/// `g ← g + decay·θ; m ← β1·m + (1−β1)·g; v ← β2·v + (1−β2)·g²;
/// θ ← θ − lr·m̂/(√v̂ + eps)` where `m̂ = m/(1−β1ᵗ)`, `v̂ = v/(1−β2ᵗ)`.
pub fn adam_step<P: ParamSet>(
    params: &mut P,
    grads: &P,
    state: &mut OptimizerState<P>,
    learning_rate: f64,
    weight_decay: f64,
) -> Result<()> {
    let g_blocks = grads.blocks();
    let shapes_match =
        |a: &[&[f64]], b: &[&[f64]]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len());
    if !shapes_match(&params.blocks(), &g_blocks) || !shapes_match(&params.blocks(), &state.first_moment.blocks()) {
        return Err(ClamError::dim(
            "gradient or optimizer state does not match parameter shapes",
        ));
    }
    state.step += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let mut m_blocks = state.first_moment.blocks_mut();
    let mut v_blocks = state.second_moment.blocks_mut();
    for (((theta, g), m), v) in params
        .blocks_mut()
        .into_iter()
        .zip(g_blocks)
        .zip(m_blocks.iter_mut())
        .zip(v_blocks.iter_mut())
    {
        for i in 0..theta.len() {
            let grad = g[i] + weight_decay * theta[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad;
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad * grad;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            theta[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
