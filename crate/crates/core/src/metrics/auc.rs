use crate::error::{ClamError, Result};
use crate::numerics::Matrix;

/// Area under the ROC curve via the Mann–Whitney U statistic.
///
/// Counts positive/negative pairs ordered correctly, with tied pairs worth
/// half. Computed from mid-ranks in `O(N log N)`.
pub fn auc_mw(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(ClamError::dim(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(ClamError::Numeric("scores contain NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(ClamError::Metric(format!(
            "AUC needs both classes, got {positives} positive and {negatives} negative"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean.
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_positives = order[i..=j].iter().filter(|&&k| labels[k]).count();
        positive_rank_sum += mid_rank * tied_positives as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// One-vs-rest AUCs per class and their unweighted mean.
#[derive(Clone, Debug, PartialEq)]
pub struct OvrAuc {
    pub per_class: Vec<f64>,
    pub macro_auc: f64,
}

/// `probs` is `N × n`; class `m` is scored by column `m` against `label == m`.
pub fn macro_ovr_auc(probs: &Matrix, labels: &[usize]) -> Result<OvrAuc> {
    let (rows, n) = probs.shape();
    if rows != labels.len() {
        return Err(ClamError::dim(format!(
            "{rows} probability rows for {} labels",
            labels.len()
        )));
    }
    let mut per_class = Vec::with_capacity(n);
    for m in 0..n {
        if !labels.contains(&m) {
            return Err(ClamError::Metric(format!("class {m} has no slides")));
        }
        let scores: Vec<f64> = (0..rows).map(|i| probs.get(i, m)).collect();
        let truth: Vec<bool> = labels.iter().map(|&l| l == m).collect();
        per_class.push(auc_mw(&scores, &truth)?);
    }
    let macro_auc = per_class.iter().sum::<f64>() / n as f64;
    Ok(OvrAuc { per_class, macro_auc })
}
