//! The CLAM network: instance embedding, gated multi-branch attention
//! pooling, per-class slide classifiers and per-class clustering heads.

mod backward;
mod forward;
mod params;

pub use backward::{bag_loss, loss_and_grad, loss_grad_forward, StepLoss};
pub use forward::{attention_forward, cluster_forward, embed_instances, forward, AttentionResult, ClusterOutput};
pub use params::{ClamParams, InitScheme, ModelConfig, ATTENTION_DIM, DEFAULT_FEATURE_DIM, EMBED_DIM};

use crate::error::Result;
use crate::numerics::SeededRng;

pub fn init_params(config: ModelConfig, scheme: InitScheme, rng: &mut SeededRng) -> Result<ClamParams> {
    ClamParams::init(config, scheme, rng)
}
