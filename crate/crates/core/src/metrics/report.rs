use std::fmt::Write as _;

use crate::error::{ClamError, Result};
use crate::numerics::{argmax, Matrix};

use super::{confidence_summary, macro_ovr_auc, ConfidenceSummary, GroupStats, OvrAuc};

/// Everything reported for one evaluated set of slides.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub n_slides: usize,
    pub n_classes: usize,
    pub accuracy: f64,
    /// `None` when some class has no slides, so AUC is undefined.
    pub auc: Option<OvrAuc>,
    pub confidence: ConfidenceSummary,
}

impl MetricsReport {
    pub fn from_probs(probs: &Matrix, labels: &[usize]) -> Result<Self> {
        if probs.rows() == 0 {
            return Err(ClamError::Evaluation("no slides to evaluate".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= probs.cols()) {
            return Err(ClamError::Label(format!(
                "label {bad} outside {} classes",
                probs.cols()
            )));
        }
        let confidence = confidence_summary(probs, labels)?;
        let hits = probs
            .iter_rows()
            .zip(labels)
            .filter(|(row, &l)| argmax(row) == l)
            .count();
        let auc = match macro_ovr_auc(probs, labels) {
            Ok(a) => Some(a),
            Err(ClamError::Metric(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            n_slides: probs.rows(),
            n_classes: probs.cols(),
            accuracy: hits as f64 / probs.rows() as f64,
            auc,
            confidence,
        })
    }

    /// The binary AUC (positive class 1) for two classes, else the macro AUC.
    pub fn headline_auc(&self) -> Option<f64> {
        self.auc.as_ref().map(|a| {
            if self.n_classes == 2 {
                a.per_class[1]
            } else {
                a.macro_auc
            }
        })
    }

    /// One `key=value` per line. Keys: `n_slides`, `n_classes`, `accuracy`,
    /// `auc`, `macro_auc`, `auc_class_<m>`, and `conf_{correct,incorrect}_
    /// {count,mean,std}`. Undefined quantities are left out.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_slides={}", self.n_slides);
        let _ = writeln!(out, "n_classes={}", self.n_classes);
        let _ = writeln!(out, "accuracy={}", self.accuracy);
        if let (Some(a), Some(headline)) = (&self.auc, self.headline_auc()) {
            let _ = writeln!(out, "auc={headline}");
            let _ = writeln!(out, "macro_auc={}", a.macro_auc);
            for (m, v) in a.per_class.iter().enumerate() {
                let _ = writeln!(out, "auc_class_{m}={v}");
            }
        }
        let groups: [(&str, Option<GroupStats>); 2] = [
            ("correct", self.confidence.correct),
            ("incorrect", self.confidence.incorrect),
        ];
        for (name, group) in groups {
            if let Some(g) = group {
                let _ = writeln!(out, "conf_{name}_count={}", g.count);
                let _ = writeln!(out, "conf_{name}_mean={}", g.mean);
                let _ = writeln!(out, "conf_{name}_std={}", g.std);
            }
        }
        out
    }
}

/// CSV with header `slide_id,label,prediction,p_0,…,p_{n-1}`.
pub fn write_probabilities_csv(slide_ids: &[String], labels: &[usize], probs: &Matrix) -> Result<String> {
    if slide_ids.len() != probs.rows() || labels.len() != probs.rows() {
        return Err(ClamError::dim(format!(
            "{} slide ids and {} labels for {} probability rows",
            slide_ids.len(),
            labels.len(),
            probs.rows()
        )));
    }
    let mut out = String::from("slide_id,label,prediction");
    for m in 0..probs.cols() {
        let _ = write!(out, ",p_{m}");
    }
    out.push('\n');
    for ((id, label), row) in slide_ids.iter().zip(labels).zip(probs.iter_rows()) {
        let _ = write!(out, "{id},{label},{}", argmax(row));
        for p in row {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    Ok(out)
}
