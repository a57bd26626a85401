use crate::error::{ClamError, Result};
use crate::numerics::{argmax, Matrix};

/// Mean and population standard deviation of one group of confidences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl GroupStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            count: values.len(),
            mean,
            std: var.sqrt(),
        })
    }
}

/// Confidence (max class probability) split by whether the argmax prediction
/// was right. A group with no slides is `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceSummary {
    pub correct: Option<GroupStats>,
    pub incorrect: Option<GroupStats>,
}

pub fn confidence_summary(probs: &Matrix, labels: &[usize]) -> Result<ConfidenceSummary> {
    if probs.rows() != labels.len() {
        return Err(ClamError::dim(format!(
            "{} probability rows for {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    let mut correct = Vec::new();
    let mut incorrect = Vec::new();
    for (row, &label) in probs.iter_rows().zip(labels) {
        let pred = argmax(row);
        if pred == label {
            correct.push(row[pred]);
        } else {
            incorrect.push(row[pred]);
        }
    }
    Ok(ConfidenceSummary {
        correct: GroupStats::of(&correct),
        incorrect: GroupStats::of(&incorrect),
    })
}
