use crate::checkpoint::{Checkpoint, CLAM_MAGIC};
use crate::error::{ClamError, Result};
use crate::numerics::{Matrix, SeededRng};
use crate::params::ParamSet;

/// Width of the instance embedding `h_k`.
pub const EMBED_DIM: usize = 512;
/// Width of the gated attention backbone.
pub const ATTENTION_DIM: usize = 256;
/// Default input feature width.
pub const DEFAULT_FEATURE_DIM: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub n_classes: usize,
    pub feature_dim: usize,
    /// Apply ReLU after the instance embedding layer.
    pub embed_relu: bool,
}

impl ModelConfig {
    pub fn new(n_classes: usize, feature_dim: usize) -> Self {
        ModelConfig {
            n_classes,
            feature_dim,
            embed_relu: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(ClamError::config(format!(
                "need at least 2 classes, got {}",
                self.n_classes
            )));
        }
        if self.feature_dim == 0 {
            return Err(ClamError::config("feature dimension must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Weights `U(−1/√fan_in, 1/√fan_in)`, biases zero.
    #[default]
    UniformFanIn,
    /// Everything zero.
    Zeros,
}

impl InitScheme {
    /// Standard deviation the scheme targets for a layer with `fan_in` inputs.
    pub fn target_std(self, fan_in: usize) -> f64 {
        match self {
            InitScheme::UniformFanIn => 1.0 / (3.0 * fan_in as f64).sqrt(),
            InitScheme::Zeros => 0.0,
        }
    }
}

/// Learnable weights of the CLAM network.
#[derive(Clone, Debug, PartialEq)]
pub struct ClamParams {
    pub config: ModelConfig,
    /// Instance embedder `W1` (`512 × D`).
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// Gate projection `Ua` (`256 × 512`), passed through a sigmoid.
    pub ua: Matrix,
    pub ua_bias: Vec<f64>,
    /// Value projection `Va` (`256 × 512`), passed through tanh.
    pub va: Matrix,
    pub va_bias: Vec<f64>,
    /// Row `m` is attention branch `Wa,m` (`n × 256`).
    pub attention_heads: Matrix,
    pub attention_bias: Vec<f64>,
    /// Row `m` is the slide classifier `Wc,m` (`n × 512`).
    pub classifiers: Matrix,
    pub classifier_bias: Vec<f64>,
    /// Clustering head `Winst,m` (`2 × 512`) per class.
    pub instance_heads: Vec<Matrix>,
    /// Row `m` is the bias of clustering head `m` (`n × 2`).
    pub instance_bias: Matrix,
}

fn init_matrix(rows: usize, cols: usize, scheme: InitScheme, rng: &mut SeededRng) -> Matrix {
    match scheme {
        InitScheme::Zeros => Matrix::zeros(rows, cols),
        InitScheme::UniformFanIn => {
            let bound = 1.0 / (cols as f64).sqrt();
            let data = (0..rows * cols).map(|_| rng.uniform_range(-bound, bound)).collect();
            Matrix::from_vec(rows, cols, data).expect("sized buffer")
        }
    }
}

impl ClamParams {
    /// Draws fresh parameters. Weight matrices are sampled in the order
    /// `W1, Ua, Va, Wa, Wc, Winst[0..n]`, each row-major.
    pub fn init(config: ModelConfig, scheme: InitScheme, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let n = config.n_classes;
        let w1 = init_matrix(EMBED_DIM, config.feature_dim, scheme, rng);
        let ua = init_matrix(ATTENTION_DIM, EMBED_DIM, scheme, rng);
        let va = init_matrix(ATTENTION_DIM, EMBED_DIM, scheme, rng);
        let attention_heads = init_matrix(n, ATTENTION_DIM, scheme, rng);
        let classifiers = init_matrix(n, EMBED_DIM, scheme, rng);
        let instance_heads = (0..n).map(|_| init_matrix(2, EMBED_DIM, scheme, rng)).collect();
        Ok(ClamParams {
            config,
            w1,
            b1: vec![0.0; EMBED_DIM],
            ua,
            ua_bias: vec![0.0; ATTENTION_DIM],
            va,
            va_bias: vec![0.0; ATTENTION_DIM],
            attention_heads,
            attention_bias: vec![0.0; n],
            classifiers,
            classifier_bias: vec![0.0; n],
            instance_heads,
            instance_bias: Matrix::zeros(n, 2),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    fn expected_shapes(config: &ModelConfig) -> Vec<(usize, usize)> {
        let n = config.n_classes;
        let mut shapes = vec![
            (EMBED_DIM, config.feature_dim),
            (1, EMBED_DIM),
            (ATTENTION_DIM, EMBED_DIM),
            (1, ATTENTION_DIM),
            (ATTENTION_DIM, EMBED_DIM),
            (1, ATTENTION_DIM),
            (n, ATTENTION_DIM),
            (1, n),
            (n, EMBED_DIM),
            (1, n),
        ];
        for _ in 0..n {
            shapes.push((2, EMBED_DIM));
            shapes.push((1, 2));
        }
        shapes
    }

    /// Verifies every dimension against the configuration.
    pub fn check_shapes(&self) -> Result<()> {
        let expected = Self::expected_shapes(&self.config);
        let actual: Vec<(usize, usize)> = self.matrices().iter().map(|m| m.shape()).collect();
        if actual != expected {
            return Err(ClamError::dim(format!(
                "parameter shapes {actual:?} do not match {expected:?}"
            )));
        }
        Ok(())
    }

    /// Matrices in checkpoint order; biases become single-row matrices and
    /// clustering head biases are split per class.
    fn matrices(&self) -> Vec<Matrix> {
        let mut out = vec![
            self.w1.clone(),
            Matrix::row_vector(&self.b1),
            self.ua.clone(),
            Matrix::row_vector(&self.ua_bias),
            self.va.clone(),
            Matrix::row_vector(&self.va_bias),
            self.attention_heads.clone(),
            Matrix::row_vector(&self.attention_bias),
            self.classifiers.clone(),
            Matrix::row_vector(&self.classifier_bias),
        ];
        for (m, head) in self.instance_heads.iter().enumerate() {
            out.push(head.clone());
            out.push(Matrix::row_vector(self.instance_bias.row(m)));
        }
        out
    }

    /// Serializes to the `CLAMCKPT` container. The embedding activation is a
    /// run-time setting and is not stored.
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        Checkpoint {
            magic: CLAM_MAGIC,
            n_classes: self.config.n_classes as u32,
            feature_dim: self.config.feature_dim as u32,
            matrices: self.matrices(),
        }
        .to_bytes()
    }

    /// Parses a `CLAMCKPT` container; the embedding activation defaults to ReLU.
    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let ck = Checkpoint::from_bytes(bytes, &CLAM_MAGIC)?;
        let config = ModelConfig::new(ck.n_classes as usize, ck.feature_dim as usize);
        config.validate()?;
        ck.expect_shapes(&Self::expected_shapes(&config))?;
        let n = config.n_classes;
        let mut it = ck.matrices.into_iter();
        let mut next = || it.next().expect("shape-checked");
        let w1 = next();
        let b1 = next().into_vec();
        let ua = next();
        let ua_bias = next().into_vec();
        let va = next();
        let va_bias = next().into_vec();
        let attention_heads = next();
        let attention_bias = next().into_vec();
        let classifiers = next();
        let classifier_bias = next().into_vec();
        let mut instance_heads = Vec::with_capacity(n);
        let mut bias_rows = Vec::with_capacity(n);
        for _ in 0..n {
            instance_heads.push(next());
            bias_rows.push(next().into_vec());
        }
        Ok(ClamParams {
            config,
            w1,
            b1,
            ua,
            ua_bias,
            va,
            va_bias,
            attention_heads,
            attention_bias,
            classifiers,
            classifier_bias,
            instance_heads,
            instance_bias: Matrix::from_rows(&bias_rows)?,
        })
    }
}

impl ParamSet for ClamParams {
    fn block_names(&self) -> Vec<String> {
        let mut names: Vec<String> = [
            "w1",
            "b1",
            "ua",
            "ua_bias",
            "va",
            "va_bias",
            "attention_heads",
            "attention_bias",
            "classifiers",
            "classifier_bias",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        names.extend((0..self.instance_heads.len()).map(|m| format!("instance_heads[{m}]")));
        names.push("instance_bias".into());
        names
    }

    fn blocks(&self) -> Vec<&[f64]> {
        let mut b: Vec<&[f64]> = vec![
            self.w1.data(),
            &self.b1,
            self.ua.data(),
            &self.ua_bias,
            self.va.data(),
            &self.va_bias,
            self.attention_heads.data(),
            &self.attention_bias,
            self.classifiers.data(),
            &self.classifier_bias,
        ];
        b.extend(self.instance_heads.iter().map(|h| h.data()));
        b.push(self.instance_bias.data());
        b
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut b: Vec<&mut [f64]> = vec![
            self.w1.data_mut(),
            &mut self.b1,
            self.ua.data_mut(),
            &mut self.ua_bias,
            self.va.data_mut(),
            &mut self.va_bias,
            self.attention_heads.data_mut(),
            &mut self.attention_bias,
            self.classifiers.data_mut(),
            &mut self.classifier_bias,
        ];
        b.extend(self.instance_heads.iter_mut().map(|h| h.data_mut()));
        b.push(self.instance_bias.data_mut());
        b
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for block in z.blocks_mut() {
            block.fill(0.0);
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_of(values: &[f64]) -> f64 {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
    }

    #[test]
    fn shapes_for_two_classes() {
        let p = ClamParams::init(
            ModelConfig::new(2, DEFAULT_FEATURE_DIM),
            InitScheme::default(),
            &mut SeededRng::new(1),
        )
        .unwrap();
        p.check_shapes().unwrap();
        assert_eq!(p.w1.shape(), (512, 1024));
        assert_eq!(p.ua.shape(), (256, 512));
        assert_eq!(p.attention_heads.shape(), (2, 256));
        assert_eq!(p.classifiers.shape(), (2, 512));
        assert_eq!(p.instance_heads.len(), 2);
        assert_eq!(p.instance_heads[1].shape(), (2, 512));
        assert!(p.b1.iter().all(|&b| b == 0.0));
        assert!(p.all_finite());
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = ModelConfig::new(3, 32);
        let a = ClamParams::init(cfg, InitScheme::default(), &mut SeededRng::new(9)).unwrap();
        let b = ClamParams::init(cfg, InitScheme::default(), &mut SeededRng::new(9)).unwrap();
        assert_eq!(a.to_checkpoint_bytes(), b.to_checkpoint_bytes());
    }

    #[test]
    fn init_std_matches_scheme() {
        let cfg = ModelConfig::new(3, DEFAULT_FEATURE_DIM);
        let p = ClamParams::init(cfg, InitScheme::UniformFanIn, &mut SeededRng::new(5)).unwrap();
        let layers: Vec<(&[f64], usize)> = vec![
            (p.w1.data(), DEFAULT_FEATURE_DIM),
            (p.ua.data(), EMBED_DIM),
            (p.va.data(), EMBED_DIM),
            (p.attention_heads.data(), ATTENTION_DIM),
            (p.classifiers.data(), EMBED_DIM),
            (p.instance_heads[2].data(), EMBED_DIM),
        ];
        for (values, fan_in) in layers {
            let target = InitScheme::UniformFanIn.target_std(fan_in);
            let got = std_of(values);
            assert!((got - target).abs() < 0.2 * target, "{got} vs {target}");
        }
    }

    #[test]
    fn rejects_single_class() {
        let r = ClamParams::init(ModelConfig::new(1, 8), InitScheme::default(), &mut SeededRng::new(1));
        assert!(matches!(r, Err(ClamError::Config(_))));
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = ModelConfig::new(3, 16);
        let mut p = ClamParams::init(cfg, InitScheme::default(), &mut SeededRng::new(4)).unwrap();
        p.instance_bias.set(2, 1, -0.25);
        p.classifier_bias[1] = 3.5;
        let bytes = p.to_checkpoint_bytes();
        let back = ClamParams::from_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_checkpoint_bytes(), bytes);
    }

    #[test]
    fn block_views_are_consistent() {
        let mut p = ClamParams::init(ModelConfig::new(2, 4), InitScheme::default(), &mut SeededRng::new(4)).unwrap();
        assert_eq!(p.block_names().len(), p.blocks().len());
        let total = p.num_params();
        assert_eq!(
            total,
            512 * 4 + 512 + 2 * (256 * 512 + 256) + 2 * 256 + 2 + 2 * 512 + 2 + 2 * 1024 + 4
        );
        p.blocks_mut()[7][1] = 9.0;
        assert_eq!(p.attention_bias[1], 9.0);
        assert!(p.zeros_like().blocks().iter().all(|b| b.iter().all(|&x| x == 0.0)));
    }
}
