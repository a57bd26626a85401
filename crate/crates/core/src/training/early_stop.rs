/// Tracks the best validation loss and decides when to stop.
///
/// Epochs are numbered from 1. Training stops after epoch `e` when
/// `e ≥ max_epochs`, or when `e ≥ min_epochs` and the best loss is more than
/// `patience` epochs old. Only strict improvements replace the snapshot.
#[derive(Clone, Debug)]
pub struct EarlyStopState<P> {
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs_since_best: usize,
    pub best_checkpoint: Option<P>,
    pub min_epochs: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl<P> EarlyStopState<P> {
    pub fn new(min_epochs: usize, max_epochs: usize, patience: usize) -> Self {
        Self {
            best_val_loss: f64::INFINITY,
            best_epoch: 0,
            epochs_since_best: 0,
            best_checkpoint: None,
            min_epochs,
            max_epochs,
            patience,
        }
    }

    /// Records epoch `epoch`'s validation loss, snapshotting the model on
    /// improvement. Returns whether to stop.
    pub fn update(&mut self, epoch: usize, val_loss: f64, snapshot: impl FnOnce() -> P) -> bool {
        if val_loss < self.best_val_loss {
            self.best_val_loss = val_loss;
            self.best_epoch = epoch;
            self.epochs_since_best = 0;
            self.best_checkpoint = Some(snapshot());
        } else {
            self.epochs_since_best += 1;
        }
        epoch >= self.max_epochs || (epoch >= self.min_epochs && self.epochs_since_best > self.patience)
    }
}
