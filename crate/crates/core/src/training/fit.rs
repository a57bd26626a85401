use crate::bag::FeatureBag;
use crate::error::{ClamError, Result};
use crate::metrics::MetricsReport;
use crate::numerics::{softmax_unchecked, Matrix, SeededRng};
use crate::weak::cross_entropy;

use super::adam::{adam_step, OptimizerState};
use super::classifier::BagClassifier;
use super::config::TrainConfig;
use super::early_stop::EarlyStopState;
use super::log::{EpochRecord, TrainingLog};
use super::sampler::BalancedSampler;

fn check_bags<M: BagClassifier>(model: &M, bags: &[FeatureBag]) -> Result<Vec<usize>> {
    bags.iter()
        .map(|b| {
            if b.feature_dim() != model.feature_dim() {
                return Err(ClamError::Dimension(format!(
                    "slide {} has {} features per instance, model expects {}",
                    b.slide_id,
                    b.feature_dim(),
                    model.feature_dim()
                )));
            }
            b.class(model.n_classes())
        })
        .collect()
}

fn diverged(epoch: usize) -> impl Fn(ClamError) -> ClamError {
    move |e| match e {
        ClamError::Numeric(message) => ClamError::Training { epoch, message },
        other => other,
    }
}

/// Mean slide-level cross-entropy over `bags`, in order.
pub fn validation_loss<M: BagClassifier>(model: &M, bags: &[FeatureBag]) -> Result<f64> {
    if bags.is_empty() {
        return Err(ClamError::Evaluation("no validation slides".into()));
    }
    let classes = check_bags(model, bags)?;
    let mut sum = 0.0;
    for (bag, y) in bags.iter().zip(classes) {
        sum += cross_entropy(&model.slide_logits(&bag.features)?, y)?.value;
    }
    Ok(sum / bags.len() as f64)
}

/// Trains `model` on `train` with class-balanced single-bag Adam steps and
/// returns the parameters from the epoch with the lowest validation loss.
///
/// Each epoch draws `train.len()` bags with replacement from a sampler
/// seeded by `config.seed`.
pub fn fit<M: BagClassifier>(
    train: &[FeatureBag],
    val: &[FeatureBag],
    mut model: M,
    config: &TrainConfig,
) -> Result<(M, TrainingLog)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(ClamError::config(format!(
            "need training and validation slides, got {} and {}",
            train.len(),
            val.len()
        )));
    }
    let classes = check_bags(&model, train)?;
    check_bags(&model, val)?;
    let sampler = BalancedSampler::new(&classes, model.n_classes())?;
    let mut rng = SeededRng::new(config.seed);
    let mut optimizer = OptimizerState::new(&model, config.adam);
    let mut early = EarlyStopState::new(config.min_epochs, config.max_epochs, config.patience);
    let mut log = TrainingLog::default();

    for epoch in 1..=config.max_epochs {
        let draws = sampler.epoch(&mut rng);
        let (mut total, mut slide, mut patch) = (0.0, 0.0, 0.0);
        for &i in &draws {
            let (loss, grads) = model
                .loss_and_grad(&train[i].features, classes[i], &config.loss)
                .map_err(diverged(epoch))?;
            if !loss.total.is_finite() {
                return Err(ClamError::Training {
                    epoch,
                    message: format!("loss on slide {} is {}", train[i].slide_id, loss.total),
                });
            }
            adam_step(
                &mut model,
                &grads,
                &mut optimizer,
                config.learning_rate,
                config.weight_decay,
            )?;
            total += loss.total;
            slide += loss.slide;
            patch += loss.patch;
        }
        if !model.all_finite() {
            return Err(ClamError::Training {
                epoch,
                message: "parameters became non-finite".into(),
            });
        }
        let val_loss = validation_loss(&model, val).map_err(diverged(epoch))?;
        if !val_loss.is_finite() {
            return Err(ClamError::Training {
                epoch,
                message: format!("validation loss is {val_loss}"),
            });
        }
        let stop = early.update(epoch, val_loss, || model.clone());
        let n = draws.len() as f64;
        log.records.push(EpochRecord {
            epoch,
            train_loss: total / n,
            train_slide_loss: slide / n,
            train_patch_loss: patch / n,
            val_loss,
            stopped: stop,
        });
        if stop {
            break;
        }
    }
    log.best_epoch = early.best_epoch;
    let best = early
        .best_checkpoint
        .expect("at least one epoch with finite validation loss");
    Ok((best, log))
}

/// `N × n` class probabilities, one row per bag.
pub fn predict_probs<M: BagClassifier>(model: &M, bags: &[FeatureBag]) -> Result<Matrix> {
    let mut probs = Matrix::zeros(bags.len(), model.n_classes());
    for (i, bag) in bags.iter().enumerate() {
        let logits = model.slide_logits(&bag.features)?;
        probs.row_mut(i).copy_from_slice(&softmax_unchecked(&logits));
    }
    Ok(probs)
}

/// Held-out predictions and their metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldEvaluation {
    pub slide_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub probs: Matrix,
    pub report: MetricsReport,
}

pub fn evaluate_fold<M: BagClassifier>(model: &M, bags: &[FeatureBag]) -> Result<FoldEvaluation> {
    if bags.is_empty() {
        return Err(ClamError::Evaluation("empty test set".into()));
    }
    let labels = check_bags(model, bags)?;
    let probs = predict_probs(model, bags)?;
    let report = MetricsReport::from_probs(&probs, &labels)?;
    Ok(FoldEvaluation {
        slide_ids: bags.iter().map(|b| b.slide_id.clone()).collect(),
        labels,
        probs,
        report,
    })
}
