use crate::error::{ClamError, Result};
use crate::numerics::{Matrix, SeededRng};

use super::image::RgbImage;
use super::patch::PATCH_SIZE;

/// Turns one patch image into a feature vector.
pub trait FeatureExtractor {
    fn dim(&self) -> usize;

    fn extract(&self, patch: &RgbImage) -> Result<Vec<f64>>;
}

const GRID: usize = 8;
const BLOCK: usize = PATCH_SIZE / GRID;
/// 192 block colour means followed by 64 block luminance variances.
pub const STATISTICS_LEN: usize = GRID * GRID * 4;

/// Colour and texture summary of a 256×256 patch on an 8×8 grid of 32×32
/// blocks: per block the mean R, G, B (scaled to [0, 1]), then per block the
/// population variance of luminance `0.299R + 0.587G + 0.114B`.
pub fn patch_statistics(patch: &RgbImage) -> Result<Vec<f64>> {
    if patch.width() != PATCH_SIZE || patch.height() != PATCH_SIZE {
        return Err(ClamError::dim(format!(
            "patch must be {PATCH_SIZE}×{PATCH_SIZE}, got {}×{}",
            patch.width(),
            patch.height()
        )));
    }
    let mut means = Vec::with_capacity(GRID * GRID * 3);
    let mut variances = Vec::with_capacity(GRID * GRID);
    let n = (BLOCK * BLOCK) as f64;
    for by in 0..GRID {
        for bx in 0..GRID {
            let mut sum = [0.0f64; 3];
            let mut lum = 0.0;
            let mut lum_sq = 0.0;
            for y in by * BLOCK..(by + 1) * BLOCK {
                for x in bx * BLOCK..(bx + 1) * BLOCK {
                    let p = patch.get(x, y).map(|c| c as f64 / 255.0);
                    for c in 0..3 {
                        sum[c] += p[c];
                    }
                    let l = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
                    lum += l;
                    lum_sq += l * l;
                }
            }
            means.extend(sum.iter().map(|s| s / n));
            let mean = lum / n;
            variances.push((lum_sq / n - mean * mean).max(0.0));
        }
    }
    means.extend(variances);
    Ok(means)
}

/// Deterministic stand-in for a pretrained CNN: patch statistics times a
/// fixed Gaussian projection drawn from `seed`.
#[derive(Clone, Debug)]
pub struct StubExtractor {
    projection: Matrix,
}

impl StubExtractor {
    /// Projection entries are `N(0, 1/256)`, drawn row by row.
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(ClamError::config("feature dimension must be positive"));
        }
        let mut rng = SeededRng::new(seed);
        let scale = 1.0 / (STATISTICS_LEN as f64).sqrt();
        let data = (0..dim * STATISTICS_LEN).map(|_| scale * rng.normal()).collect();
        Ok(Self {
            projection: Matrix::from_vec(dim, STATISTICS_LEN, data)?,
        })
    }
}

impl FeatureExtractor for StubExtractor {
    fn dim(&self) -> usize {
        self.projection.rows()
    }

    fn extract(&self, patch: &RgbImage) -> Result<Vec<f64>> {
        let stats = patch_statistics(patch)?;
        Ok(self
            .projection
            .iter_rows()
            .map(|w| crate::numerics::dot(w, &stats))
            .collect())
    }
}
