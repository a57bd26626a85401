//! Class-balanced single-bag optimization with Adam and early stopping,
//! case-level Monte-Carlo splits, and held-out evaluation.

mod adam;
mod classifier;
mod config;
mod early_stop;
mod fit;
mod log;
mod sampler;
mod split;

pub use adam::{adam_step, OptimizerState};
pub use classifier::BagClassifier;
pub use config::{AdamConfig, TrainConfig};
pub use early_stop::EarlyStopState;
pub use fit::{evaluate_fold, fit, predict_probs, validation_loss, FoldEvaluation};
pub use log::{EpochRecord, TrainingLog};
pub use sampler::BalancedSampler;
pub use split::{monte_carlo_split, CaseRecord, Fold, SplitFractions, SplitPlan, SplitSet};
