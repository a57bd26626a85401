use crate::error::{ClamError, Result};
use crate::numerics::Matrix;

use super::LossConfig;

/// Binary evidence label attached to one instance by one branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PseudoLabel {
    pub instance: usize,
    /// 1 for positive evidence, 0 for negative or false-positive evidence.
    pub label: u8,
}

/// Per-branch pseudo-labels produced for a single bag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoLabelSet {
    /// `branches[m]` holds the labels assigned through attention branch `m`.
    pub branches: Vec<Vec<PseudoLabel>>,
    pub mutually_exclusive: bool,
    /// Requested evidence count per side.
    pub requested: usize,
    /// Effective count per side after small-bag truncation.
    pub per_side: usize,
}

impl PseudoLabelSet {
    pub fn total(&self) -> usize {
        self.branches.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// `(branch, instance, label)` triples in branch order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        self.branches
            .iter()
            .enumerate()
            .flat_map(|(m, labels)| labels.iter().map(move |l| (m, l.instance, l.label)))
    }
}

/// Instance indices sorted ascending by score; ties keep index order.
fn ascending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
    order
}

/// Instance-level clustering targets for one bag.
///
/// The branch of the true class `y` labels its `B′` least attended instances 0
/// and its `B′` most attended instances 1, where `B′ = min(B, ⌊K/2⌋)`. When
/// classes are mutually exclusive, every other branch labels its own `B′` most
/// attended instances 0; otherwise those branches produce nothing.
///
/// `attention` is `n × K` (one row per branch). Selection is rank based, so
/// pre- or post-softmax scores give identical results.
pub fn generate_pseudo_labels(attention: &Matrix, y: usize, config: &LossConfig) -> Result<PseudoLabelSet> {
    let (n, k) = attention.shape();
    if k < 2 {
        return Err(ClamError::DegenerateBag(format!(
            "pseudo-labelling needs at least 2 instances, got {k}"
        )));
    }
    if y >= n {
        return Err(ClamError::Label(format!("class {y} outside 0..{n}")));
    }
    let per_side = config.sample_size.min(k / 2);
    let mut branches = vec![Vec::new(); n];

    for (m, branch) in branches.iter_mut().enumerate() {
        if m != y && !config.mutually_exclusive {
            continue;
        }
        let order = ascending_order(attention.row(m));
        let top = &order[k - per_side..];
        if m == y {
            branch.extend(order[..per_side].iter().map(|&i| PseudoLabel { instance: i, label: 0 }));
            branch.extend(top.iter().map(|&i| PseudoLabel { instance: i, label: 1 }));
        } else {
            branch.extend(top.iter().map(|&i| PseudoLabel { instance: i, label: 0 }));
        }
    }

    Ok(PseudoLabelSet {
        branches,
        mutually_exclusive: config.mutually_exclusive,
        requested: config.sample_size,
        per_side,
    })
}
