//! Slide-level evaluation: ROC AUC, confidence by correctness, PCA, and the
//! text report written after evaluation.

mod auc;
mod confidence;
mod pca;
mod report;

pub use auc::{auc_mw, macro_ovr_auc, OvrAuc};
pub use confidence::{confidence_summary, ConfidenceSummary, GroupStats};
pub use pca::{pca_project, PcaProjection, MAX_COMPONENTS};
pub use report::{write_probabilities_csv, MetricsReport};
