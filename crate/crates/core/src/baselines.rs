//! Max-pooling multiple-instance baselines.
//!
//! Every instance is scored by a two-layer network
//! `s_k = W2·relu(W1·z_k + b1) + b2`, and a single instance stands in for the
//! whole slide: the one with the highest positive-class score in the binary
//! case (MIL), or the one with the highest single raw class score otherwise
//! (mMIL). Ties go to the lowest instance index.

use crate::checkpoint::{Checkpoint, MIL_MAGIC};
use crate::error::{ClamError, Result};
use crate::model::{InitScheme, EMBED_DIM};
use crate::numerics::{softmax_unchecked, Matrix, SeededRng};
use crate::params::ParamSet;
use crate::weak::cross_entropy;

#[derive(Clone, Debug, PartialEq)]
pub struct MilParams {
    pub n_classes: usize,
    pub feature_dim: usize,
    /// `512 × D`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `n × 512`
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// The instance chosen to represent a slide and its scores.
#[derive(Clone, Debug, PartialEq)]
pub struct MilOutput {
    pub selected: usize,
    pub slide_logits: Vec<f64>,
    pub probs: Vec<f64>,
    /// `K × n` raw scores of every instance.
    pub instance_scores: Matrix,
}

impl MilParams {
    pub fn init(n_classes: usize, feature_dim: usize, scheme: InitScheme, rng: &mut SeededRng) -> Result<Self> {
        if n_classes < 2 {
            return Err(ClamError::config(format!("need at least 2 classes, got {n_classes}")));
        }
        if feature_dim == 0 {
            return Err(ClamError::config("feature dimension must be positive"));
        }
        let mut draw = |rows: usize, cols: usize| match scheme {
            InitScheme::Zeros => Matrix::zeros(rows, cols),
            InitScheme::UniformFanIn => {
                let bound = 1.0 / (cols as f64).sqrt();
                let data = (0..rows * cols).map(|_| rng.uniform_range(-bound, bound)).collect();
                Matrix::from_vec(rows, cols, data).expect("sized buffer")
            }
        };
        let w1 = draw(EMBED_DIM, feature_dim);
        let w2 = draw(n_classes, EMBED_DIM);
        Ok(MilParams {
            n_classes,
            feature_dim,
            w1,
            b1: vec![0.0; EMBED_DIM],
            w2,
            b2: vec![0.0; n_classes],
        })
    }

    fn hidden(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.feature_dim {
            return Err(ClamError::dim(format!(
                "features have {} columns, model expects {}",
                features.cols(),
                self.feature_dim
            )));
        }
        if features.rows() == 0 {
            return Err(ClamError::DegenerateBag("bag has no instances".into()));
        }
        let mut h = features.matmul_nt(&self.w1)?;
        h.add_row_broadcast(&self.b1)?;
        h.map_inplace(|x| x.max(0.0));
        Ok(h)
    }

    /// Raw `K × n` scores of every instance.
    pub fn instance_scores(&self, features: &Matrix) -> Result<Matrix> {
        let mut s = self.hidden(features)?.matmul_nt(&self.w2)?;
        s.add_row_broadcast(&self.b2)?;
        s.ensure_finite("instance scores")?;
        Ok(s)
    }

    /// Applies the binary rule for two classes and the multi-class rule otherwise.
    pub fn forward(&self, features: &Matrix) -> Result<MilOutput> {
        let scores = self.instance_scores(features)?;
        let selected = if self.n_classes == 2 {
            select_binary(&scores)
        } else {
            select_multiclass(&scores)
        };
        Ok(output(scores, selected))
    }

    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        Checkpoint {
            magic: MIL_MAGIC,
            n_classes: self.n_classes as u32,
            feature_dim: self.feature_dim as u32,
            matrices: vec![
                self.w1.clone(),
                Matrix::row_vector(&self.b1),
                self.w2.clone(),
                Matrix::row_vector(&self.b2),
            ],
        }
        .to_bytes()
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let ck = Checkpoint::from_bytes(bytes, &MIL_MAGIC)?;
        let (n, d) = (ck.n_classes as usize, ck.feature_dim as usize);
        if n < 2 {
            return Err(ClamError::config(format!("checkpoint declares {n} classes")));
        }
        ck.expect_shapes(&[(EMBED_DIM, d), (1, EMBED_DIM), (n, EMBED_DIM), (1, n)])?;
        let mut it = ck.matrices.into_iter();
        let w1 = it.next().expect("checked");
        let b1 = it.next().expect("checked").into_vec();
        let w2 = it.next().expect("checked");
        let b2 = it.next().expect("checked").into_vec();
        Ok(MilParams {
            n_classes: n,
            feature_dim: d,
            w1,
            b1,
            w2,
            b2,
        })
    }
}

fn output(scores: Matrix, selected: usize) -> MilOutput {
    let slide_logits = scores.row(selected).to_vec();
    let probs = softmax_unchecked(&slide_logits);
    MilOutput {
        selected,
        slide_logits,
        probs,
        instance_scores: scores,
    }
}

/// Index of the instance with the highest class-1 score.
pub fn select_binary(scores: &Matrix) -> usize {
    let mut best = 0;
    for k in 1..scores.rows() {
        if scores.get(k, 1) > scores.get(best, 1) {
            best = k;
        }
    }
    best
}

/// Index of the instance holding the single largest raw class score.
pub fn select_multiclass(scores: &Matrix) -> usize {
    let row_max = |k: usize| scores.row(k).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best = 0;
    let mut best_score = row_max(0);
    for k in 1..scores.rows() {
        let s = row_max(k);
        if s > best_score {
            best = k;
            best_score = s;
        }
    }
    best
}

/// Binary MIL forward pass; the parameters must have exactly two classes.
pub fn mil_forward(features: &Matrix, params: &MilParams) -> Result<MilOutput> {
    if params.n_classes != 2 {
        return Err(ClamError::dim(format!(
            "binary MIL needs 2 classes, parameters have {}",
            params.n_classes
        )));
    }
    let scores = params.instance_scores(features)?;
    let selected = select_binary(&scores);
    Ok(output(scores, selected))
}

/// Multi-class max-pooling forward pass.
pub fn mmil_forward(features: &Matrix, params: &MilParams) -> Result<MilOutput> {
    let scores = params.instance_scores(features)?;
    let selected = select_multiclass(&scores);
    Ok(output(scores, selected))
}

/// Cross-entropy on the selected instance and its gradient, which touches
/// only that instance's path through the network.
pub fn mil_loss_and_grad(features: &Matrix, y: usize, params: &MilParams) -> Result<(f64, MilParams, usize)> {
    let hidden = params.hidden(features)?;
    let mut scores = hidden.matmul_nt(&params.w2)?;
    scores.add_row_broadcast(&params.b2)?;
    scores.ensure_finite("instance scores")?;
    let sel = if params.n_classes == 2 {
        select_binary(&scores)
    } else {
        select_multiclass(&scores)
    };
    let ce = cross_entropy(scores.row(sel), y)?;

    let mut g = params.zeros_like();
    let h = hidden.row(sel);
    let mut dh = vec![0.0; EMBED_DIM];
    for (c, &ds) in ce.grad.iter().enumerate() {
        g.b2[c] = ds;
        for ((gw, dhi), (&hi, &w)) in
            g.w2.row_mut(c)
                .iter_mut()
                .zip(dh.iter_mut())
                .zip(h.iter().zip(params.w2.row(c)))
        {
            *gw = ds * hi;
            *dhi += ds * w;
        }
    }
    let z = features.row(sel);
    for (j, d) in dh.iter().enumerate() {
        if h[j] <= 0.0 {
            continue;
        }
        g.b1[j] = *d;
        for (gw, &zi) in g.w1.row_mut(j).iter_mut().zip(z) {
            *gw = d * zi;
        }
    }
    Ok((ce.value, g, sel))
}

impl ParamSet for MilParams {
    fn block_names(&self) -> Vec<String> {
        ["w1", "b1", "w2", "b2"].iter().map(|s| s.to_string()).collect()
    }

    fn blocks(&self) -> Vec<&[f64]> {
        vec![self.w1.data(), &self.b1, self.w2.data(), &self.b2]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w1.data_mut(), &mut self.b1, self.w2.data_mut(), &mut self.b2]
    }

    fn zeros_like(&self) -> Self {
        MilParams {
            n_classes: self.n_classes,
            feature_dim: self.feature_dim,
            w1: Matrix::zeros(self.w1.rows(), self.w1.cols()),
            b1: vec![0.0; self.b1.len()],
            w2: Matrix::zeros(self.w2.rows(), self.w2.cols()),
            b2: vec![0.0; self.b2.len()],
        }
    }
}
