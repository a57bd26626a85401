use crate::baselines::{mil_loss_and_grad, MilParams};
use crate::error::Result;
use crate::model::{forward, loss_and_grad, ClamParams, StepLoss};
use crate::numerics::Matrix;
use crate::params::ParamSet;
use crate::weak::LossConfig;

/// A bag-level model the training loop can optimize.
pub trait BagClassifier: ParamSet {
    fn n_classes(&self) -> usize;

    fn feature_dim(&self) -> usize;

    /// Unnormalized class scores of one bag.
    fn slide_logits(&self, features: &Matrix) -> Result<Vec<f64>>;

    /// Training loss of one bag with class `y` and its gradient.
    fn loss_and_grad(&self, features: &Matrix, y: usize, loss: &LossConfig) -> Result<(StepLoss, Self)>;

    fn to_checkpoint_bytes(&self) -> Vec<u8>;
}

impl BagClassifier for ClamParams {
    fn n_classes(&self) -> usize {
        ClamParams::n_classes(self)
    }

    fn feature_dim(&self) -> usize {
        ClamParams::feature_dim(self)
    }

    fn slide_logits(&self, features: &Matrix) -> Result<Vec<f64>> {
        forward(features, self).map(|r| r.slide_logits)
    }

    fn loss_and_grad(&self, features: &Matrix, y: usize, loss: &LossConfig) -> Result<(StepLoss, Self)> {
        loss_and_grad(features, y, self, loss)
    }

    fn to_checkpoint_bytes(&self) -> Vec<u8> {
        ClamParams::to_checkpoint_bytes(self)
    }
}

/// Max-pooling MIL for two classes, mMIL otherwise. The loss config is
/// unused: the objective is plain cross-entropy on the selected instance.
impl BagClassifier for MilParams {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn slide_logits(&self, features: &Matrix) -> Result<Vec<f64>> {
        self.forward(features).map(|o| o.slide_logits)
    }

    fn loss_and_grad(&self, features: &Matrix, y: usize, _loss: &LossConfig) -> Result<(StepLoss, Self)> {
        let (value, grads, _) = mil_loss_and_grad(features, y, self)?;
        let loss = StepLoss {
            total: value,
            slide: value,
            patch: 0.0,
            pseudo_labels: 0,
        };
        Ok((loss, grads))
    }

    fn to_checkpoint_bytes(&self) -> Vec<u8> {
        MilParams::to_checkpoint_bytes(self)
    }
}
