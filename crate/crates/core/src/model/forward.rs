use crate::error::{ClamError, Result};
use crate::numerics::{argmax, gemm, sigmoid, softmax_unchecked, Matrix};

use super::params::{ClamParams, EMBED_DIM};

/// Everything the attention path computes for one bag.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionResult {
    /// `K × 512` instance embeddings `h_k`.
    pub embedded: Matrix,
    /// `n × K` branch logits before the softmax over instances.
    pub raw_attention: Matrix,
    /// `n × K` attention weights; each row sums to one.
    pub attention: Matrix,
    /// `n × 512` class-specific slide representations.
    pub slide_repr: Matrix,
    pub slide_logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl AttentionResult {
    pub fn predicted_class(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Per-branch clustering logits, `logits[m]` is `K × 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterOutput {
    pub logits: Vec<Matrix>,
}

/// Intermediate gated-attention activations kept for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct GateCache {
    /// `tanh(H·Vaᵀ + bv)`
    pub tanh_part: Matrix,
    /// `sigm(H·Uaᵀ + bu)`
    pub gate: Matrix,
    /// Elementwise product of the two.
    pub gated: Matrix,
}

/// `relu(Z·W1ᵀ + b1)` (or without the ReLU when disabled in the config).
pub fn embed_instances(features: &Matrix, params: &ClamParams) -> Result<Matrix> {
    if features.cols() != params.feature_dim() {
        return Err(ClamError::dim(format!(
            "features have {} columns, model expects {}",
            features.cols(),
            params.feature_dim()
        )));
    }
    if features.rows() == 0 {
        return Err(ClamError::DegenerateBag("bag has no instances".into()));
    }
    let mut h = features.matmul_nt(&params.w1)?;
    h.add_row_broadcast(&params.b1)?;
    if params.config.embed_relu {
        h.map_inplace(|x| x.max(0.0));
    }
    h.ensure_finite("instance embedding")?;
    Ok(h)
}

pub(crate) fn gate_forward(embedded: &Matrix, params: &ClamParams) -> Result<GateCache> {
    let mut tanh_part = embedded.matmul_nt(&params.va)?;
    tanh_part.add_row_broadcast(&params.va_bias)?;
    tanh_part.map_inplace(f64::tanh);
    let mut gate = embedded.matmul_nt(&params.ua)?;
    gate.add_row_broadcast(&params.ua_bias)?;
    gate.map_inplace(sigmoid);
    let mut gated = tanh_part.clone();
    for (g, s) in gated.data_mut().iter_mut().zip(gate.data()) {
        *g *= s;
    }
    Ok(GateCache { tanh_part, gate, gated })
}

pub(crate) fn attention_from_gate(
    embedded: &Matrix,
    cache: &GateCache,
    params: &ClamParams,
) -> Result<AttentionResult> {
    let n = params.n_classes();
    // (n × 256)·(K × 256)ᵀ = n × K
    let mut raw = params.attention_heads.matmul_nt(&cache.gated)?;
    for m in 0..n {
        let b = params.attention_bias[m];
        raw.row_mut(m).iter_mut().for_each(|x| *x += b);
    }
    raw.ensure_finite("attention logits")?;
    let mut attention = raw.clone();
    for m in 0..n {
        let row = softmax_unchecked(raw.row(m));
        attention.row_mut(m).copy_from_slice(&row);
    }
    let slide_repr = attention.matmul(embedded)?;
    let slide_logits: Vec<f64> = (0..n)
        .map(|m| crate::numerics::dot(params.classifiers.row(m), slide_repr.row(m)) + params.classifier_bias[m])
        .collect();
    if !slide_logits.iter().all(|s| s.is_finite()) {
        return Err(ClamError::Numeric("slide logits are not finite".into()));
    }
    let probs = softmax_unchecked(&slide_logits);
    Ok(AttentionResult {
        embedded: embedded.clone(),
        raw_attention: raw,
        attention,
        slide_repr,
        slide_logits,
        probs,
    })
}

/// Gated multi-branch attention pooling over embedded instances.
pub fn attention_forward(embedded: &Matrix, params: &ClamParams) -> Result<AttentionResult> {
    if embedded.cols() != EMBED_DIM {
        return Err(ClamError::dim(format!(
            "embedded instances have {} columns, expected {EMBED_DIM}",
            embedded.cols()
        )));
    }
    if embedded.rows() == 0 {
        return Err(ClamError::DegenerateBag("bag has no instances".into()));
    }
    let cache = gate_forward(embedded, params)?;
    attention_from_gate(embedded, &cache, params)
}

/// Clustering logits `p_{m,k} = Winst,m·h_k + b` for every branch and instance.
pub fn cluster_forward(embedded: &Matrix, params: &ClamParams) -> Result<ClusterOutput> {
    if embedded.cols() != EMBED_DIM {
        return Err(ClamError::dim(format!(
            "embedded instances have {} columns, expected {EMBED_DIM}",
            embedded.cols()
        )));
    }
    let logits = params
        .instance_heads
        .iter()
        .enumerate()
        .map(|(m, head)| {
            let mut out = Matrix::zeros(embedded.rows(), 2);
            gemm(1.0, embedded, false, head, true, 0.0, &mut out);
            out.add_row_broadcast(params.instance_bias.row(m))?;
            out.ensure_finite("cluster logits")?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterOutput { logits })
}

/// Embedding followed by attention pooling and slide classification.
pub fn forward(features: &Matrix, params: &ClamParams) -> Result<AttentionResult> {
    let embedded = embed_instances(features, params)?;
    attention_forward(&embedded, params)
}
