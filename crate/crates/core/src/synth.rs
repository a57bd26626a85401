//! Synthetic bags: a few class-specific evidence instances hidden among
//! background instances that look the same in every class.

use crate::bag::FeatureBag;
use crate::error::{ClamError, Result};
use crate::numerics::{Matrix, SeededRng};

/// Gaussian mixture bag generator. Background instances are drawn around
/// the origin; evidence instances of class `c` around `separation·e_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub feature_dim: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Fraction ρ of each bag's instances that carry class evidence.
    pub evidence_fraction: f64,
    pub separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_classes: 2,
            feature_dim: 64,
            k_min: 50,
            k_max: 150,
            evidence_fraction: 0.1,
            separation: 2.0,
            noise_std: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(ClamError::config(format!(
                "need at least 2 classes, got {}",
                self.n_classes
            )));
        }
        if self.feature_dim < self.n_classes {
            return Err(ClamError::config(format!(
                "feature_dim {} cannot hold {} distinct class means",
                self.feature_dim, self.n_classes
            )));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(ClamError::config(format!(
                "bag size range {}..={} is empty or starts at 0",
                self.k_min, self.k_max
            )));
        }
        let rho = self.evidence_fraction;
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(ClamError::config(format!("evidence_fraction {rho} outside (0, 1]")));
        }
        if rho * (self.k_min as f64) < 1.0 {
            return Err(ClamError::config(format!(
                "evidence_fraction {rho} gives less than one evidence instance in a bag of {}",
                self.k_min
            )));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(ClamError::config(format!(
                "separation {} must be positive",
                self.separation
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(ClamError::config(format!(
                "noise_std {} must be non-negative",
                self.noise_std
            )));
        }
        Ok(())
    }

    /// Number of evidence instances in a bag of `k`: `⌈ρ·k⌉`, ignoring
    /// floating-point excess below 1e-9.
    pub fn evidence_count(&self, k: usize) -> usize {
        ((self.evidence_fraction * k as f64 - 1e-9).ceil() as usize).clamp(1, k)
    }

    /// Mean of class `c`'s evidence instances.
    pub fn class_mean(&self, c: usize) -> Vec<f64> {
        let mut mu = vec![0.0; self.feature_dim];
        mu[c] = self.separation;
        mu
    }
}

/// Bags `0..count`. Bag `i` has class `i mod n` and its own generator
/// seeded from `(spec.seed, i)`, so any bag can be regenerated alone.
pub fn generate_bags(spec: &SynthSpec, count: usize) -> Result<Vec<FeatureBag>> {
    spec.validate()?;
    Ok((0..count).map(|i| generate_bag(spec, i)).collect())
}

pub fn generate_bag(spec: &SynthSpec, index: usize) -> FeatureBag {
    let mut rng = SeededRng::new(SeededRng::derive_seed(spec.seed, index as u64));
    let class = index % spec.n_classes;
    let k = rng.range_inclusive(spec.k_min, spec.k_max);
    let mut order: Vec<usize> = (0..k).collect();
    rng.shuffle(&mut order);
    let mut evidence = order[..spec.evidence_count(k)].to_vec();
    evidence.sort_unstable();

    let d = spec.feature_dim;
    let mut features = Matrix::zeros(k, d);
    let mut is_evidence = vec![false; k];
    for &e in &evidence {
        is_evidence[e] = true;
    }
    for (row, evid) in features.data_mut().chunks_mut(d).zip(&is_evidence) {
        for x in row.iter_mut() {
            *x = spec.noise_std * rng.normal();
        }
        if *evid {
            row[class] += spec.separation;
        }
    }
    let mut bag = FeatureBag::from_features(format!("synth_{index:05}"), class as i32, features);
    bag.evidence = Some(evidence);
    bag
}
