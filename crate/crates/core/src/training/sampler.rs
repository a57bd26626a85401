use crate::error::{ClamError, Result};
use crate::numerics::SeededRng;

/// Draws slides with probability inversely proportional to the size of
/// their class, so every class is equally likely per draw.
#[derive(Clone, Debug)]
pub struct BalancedSampler {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BalancedSampler {
    /// `classes[i]` is the class of training slide `i`; all of `0..n_classes`
    /// must occur.
    pub fn new(classes: &[usize], n_classes: usize) -> Result<Self> {
        let mut counts = vec![0usize; n_classes];
        for &c in classes {
            if c >= n_classes {
                return Err(ClamError::Sampler(format!("class {c} outside 0..{n_classes}")));
            }
            counts[c] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(ClamError::Sampler(format!("class {empty} has no training slides")));
        }
        let present = n_classes as f64;
        let probabilities: Vec<f64> = classes.iter().map(|&c| 1.0 / (counts[c] as f64 * present)).collect();
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            probabilities,
            cumulative,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// One slide index.
    pub fn draw(&self, rng: &mut SeededRng) -> usize {
        let total = *self.cumulative.last().expect("sampler is never empty");
        let u = rng.uniform() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// One epoch: as many draws, with replacement, as there are slides.
    pub fn epoch(&self, rng: &mut SeededRng) -> Vec<usize> {
        (0..self.len()).map(|_| self.draw(rng)).collect()
    }
}
