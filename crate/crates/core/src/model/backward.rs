use crate::error::Result;
use crate::numerics::{dot, gemm, Matrix};
use crate::params::ParamSet;
use crate::weak::{cross_entropy, generate_pseudo_labels, smooth_svm_loss, total_loss, LossConfig};

use super::forward::{attention_from_gate, embed_instances, gate_forward, AttentionResult};
use super::params::{ClamParams, EMBED_DIM};

/// Loss terms for one bag.
#[derive(Clone, Debug, PartialEq)]
pub struct StepLoss {
    /// `c1·slide + c2·patch`
    pub total: f64,
    /// Slide-level cross-entropy.
    pub slide: f64,
    /// Mean clustering loss over pseudo-labelled instances.
    pub patch: f64,
    pub pseudo_labels: usize,
}

/// Loss of one bag with true class `y`, without gradients.
pub fn bag_loss(features: &Matrix, y: usize, params: &ClamParams, config: &LossConfig) -> Result<StepLoss> {
    evaluate(features, y, params, config, false).map(|(loss, _, _)| loss)
}

/// Loss of one bag and its gradient with respect to every parameter.
///
/// Pseudo-label selection is treated as constant; gradients flow through the
/// clustering logits of the selected instances and the slide classifier.
/// Bags with a single instance carry no clustering term.
pub fn loss_and_grad(
    features: &Matrix,
    y: usize,
    params: &ClamParams,
    config: &LossConfig,
) -> Result<(StepLoss, ClamParams)> {
    let (loss, grads, _) = evaluate(features, y, params, config, true)?;
    Ok((loss, grads.expect("gradients requested")))
}

/// As [`loss_and_grad`], also returning the forward pass.
pub fn loss_grad_forward(
    features: &Matrix,
    y: usize,
    params: &ClamParams,
    config: &LossConfig,
) -> Result<(StepLoss, ClamParams, AttentionResult)> {
    let (loss, grads, fwd) = evaluate(features, y, params, config, true)?;
    Ok((loss, grads.expect("gradients requested"), fwd))
}

fn evaluate(
    features: &Matrix,
    y: usize,
    params: &ClamParams,
    config: &LossConfig,
    want_grad: bool,
) -> Result<(StepLoss, Option<ClamParams>, AttentionResult)> {
    config.validate()?;
    let n = params.n_classes();
    let embedded = embed_instances(features, params)?;
    let cache = gate_forward(&embedded, params)?;
    let fwd = attention_from_gate(&embedded, &cache, params)?;
    let k = embedded.rows();

    let slide = cross_entropy(&fwd.slide_logits, y)?;

    let labels = if k >= 2 {
        Some(generate_pseudo_labels(&fwd.attention, y, config)?)
    } else {
        None
    };
    let mut patch_values = Vec::new();
    let mut patch_grads: Vec<(usize, usize, [f64; 2])> = Vec::new();
    for (m, inst, label) in labels.iter().flat_map(|l| l.iter()) {
        let head = &params.instance_heads[m];
        let h = embedded.row(inst);
        let logits = [
            dot(head.row(0), h) + params.instance_bias.get(m, 0),
            dot(head.row(1), h) + params.instance_bias.get(m, 1),
        ];
        let l = smooth_svm_loss(&logits, label as usize, config.alpha, config.tau)?;
        patch_values.push(l.value);
        patch_grads.push((m, inst, [l.grad[0], l.grad[1]]));
    }
    let total = total_loss(slide.value, &patch_values, config);
    let patch = if patch_values.is_empty() {
        0.0
    } else {
        patch_values.iter().sum::<f64>() / patch_values.len() as f64
    };
    let loss = StepLoss {
        total,
        slide: slide.value,
        patch,
        pseudo_labels: patch_values.len(),
    };
    if !total.is_finite() {
        return Err(crate::error::ClamError::Numeric("bag loss is not finite".into()));
    }
    if !want_grad {
        return Ok((loss, None, fwd));
    }

    let mut g = params.zeros_like();
    let mut d_embedded = Matrix::zeros(k, EMBED_DIM);

    // Slide classifiers.
    let mut d_repr = Matrix::zeros(n, EMBED_DIM);
    for m in 0..n {
        let ds = config.c1 * slide.grad[m];
        g.classifier_bias[m] = ds;
        for ((gw, dr), (&r, &w)) in g
            .classifiers
            .row_mut(m)
            .iter_mut()
            .zip(d_repr.row_mut(m).iter_mut())
            .zip(fwd.slide_repr.row(m).iter().zip(params.classifiers.row(m)))
        {
            *gw = ds * r;
            *dr = ds * w;
        }
    }

    // Attention pooling: repr = A·H.
    let d_attention = d_repr.matmul_nt(&embedded)?;
    gemm(1.0, &fwd.attention, true, &d_repr, false, 1.0, &mut d_embedded);

    // Softmax over instances, per branch.
    let mut d_raw = Matrix::zeros(n, k);
    for m in 0..n {
        let a = fwd.attention.row(m);
        let da = d_attention.row(m);
        let inner = dot(a, da);
        for (out, (&ai, &dai)) in d_raw.row_mut(m).iter_mut().zip(a.iter().zip(da)) {
            *out = ai * (dai - inner);
        }
        g.attention_bias[m] = d_raw.row(m).iter().sum();
    }

    // Branch heads: raw = Wa·Gᵀ + ba.
    g.attention_heads = d_raw.matmul(&cache.gated)?;
    let mut d_gated = Matrix::zeros(k, cache.gated.cols());
    gemm(1.0, &d_raw, true, &params.attention_heads, false, 0.0, &mut d_gated);

    // Gated backbone.
    let mut d_tanh_pre = d_gated.clone();
    let mut d_gate_pre = d_gated;
    for (((dt, ds), &t), &s) in d_tanh_pre
        .data_mut()
        .iter_mut()
        .zip(d_gate_pre.data_mut().iter_mut())
        .zip(cache.tanh_part.data())
        .zip(cache.gate.data())
    {
        let dg = *dt;
        *dt = dg * s * (1.0 - t * t);
        *ds = dg * t * s * (1.0 - s);
    }
    g.va = d_tanh_pre.matmul_tn(&embedded)?;
    g.va_bias = d_tanh_pre.column_sums();
    g.ua = d_gate_pre.matmul_tn(&embedded)?;
    g.ua_bias = d_gate_pre.column_sums();
    gemm(1.0, &d_tanh_pre, false, &params.va, false, 1.0, &mut d_embedded);
    gemm(1.0, &d_gate_pre, false, &params.ua, false, 1.0, &mut d_embedded);

    // Clustering heads.
    if !patch_grads.is_empty() {
        let w = config.c2 / patch_grads.len() as f64;
        for (m, inst, grad) in patch_grads {
            let h = embedded.row(inst);
            let head = &params.instance_heads[m];
            for (j, &gj) in grad.iter().enumerate() {
                let gj = gj * w;
                if gj == 0.0 {
                    continue;
                }
                let cur = g.instance_bias.get(m, j);
                g.instance_bias.set(m, j, cur + gj);
                for (gw, &hx) in g.instance_heads[m].row_mut(j).iter_mut().zip(h) {
                    *gw += gj * hx;
                }
                for (dh, &wx) in d_embedded.row_mut(inst).iter_mut().zip(head.row(j)) {
                    *dh += gj * wx;
                }
            }
        }
    }

    // Instance embedder.
    if params.config.embed_relu {
        for (d, &h) in d_embedded.data_mut().iter_mut().zip(embedded.data()) {
            if h <= 0.0 {
                *d = 0.0;
            }
        }
    }
    g.w1 = d_embedded.matmul_tn(features)?;
    g.b1 = d_embedded.column_sums();

    Ok((loss, Some(g), fwd))
}
