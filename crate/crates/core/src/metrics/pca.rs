use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ClamError, Result};
use crate::numerics::Matrix;

/// Upper bound on retained components.
pub const MAX_COMPONENTS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    /// `N × out_dims` component scores of the centered data.
    pub scores: Matrix,
    /// `k × d` unit-norm principal axes, strongest first.
    pub components: Matrix,
    /// Sample variance (`N − 1` denominator) along each retained axis.
    pub explained_variance: Vec<f64>,
}

/// Projects the rows of `vectors` onto their leading principal axes.
///
/// Keeps `min(n_components, 50, d, N − 1)` axes and returns scores on the
/// first `out_dims` of them (zero columns if fewer axes exist). Each axis is
/// signed so its largest-magnitude loading is positive. Data with no
/// variance projects to zeros.
pub fn pca_project(vectors: &Matrix, n_components: usize, out_dims: usize) -> Result<PcaProjection> {
    let (n, d) = vectors.shape();
    if n < 2 || d < 2 {
        return Err(ClamError::dim(format!("PCA needs at least 2×2 data, got {n}×{d}")));
    }
    vectors.ensure_finite("PCA input")?;
    let k = n_components.min(MAX_COMPONENTS).min(d).min(n - 1);

    let mut centered = vectors.clone();
    let mean: Vec<f64> = vectors.column_sums().iter().map(|s| s / n as f64).collect();
    for row in centered.data_mut().chunks_mut(d) {
        for (x, m) in row.iter_mut().zip(&mean) {
            *x -= m;
        }
    }

    let mut scores = Matrix::zeros(n, out_dims);
    if centered.data().iter().all(|&x| x == 0.0) {
        return Ok(PcaProjection {
            scores,
            components: Matrix::zeros(k, d),
            explained_variance: vec![0.0; k],
        });
    }

    let mut cov = centered.matmul_tn(&centered)?;
    cov.scale(1.0 / (n - 1) as f64);
    let eigen = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.data()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let mut components = Matrix::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let axis = eigen.eigenvectors.column(idx);
        let mut lead = 0;
        for j in 1..d {
            if axis[j].abs() > axis[lead].abs() {
                lead = j;
            }
        }
        let sign = if axis[lead] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components.set(c, j, sign * axis[j]);
        }
        explained_variance.push(eigen.eigenvalues[idx].max(0.0));
    }

    let projected = centered.matmul_nt(&components)?;
    for i in 0..n {
        for c in 0..out_dims.min(k) {
            scores.set(i, c, projected.get(i, c));
        }
    }
    Ok(PcaProjection {
        scores,
        components,
        explained_variance,
    })
}
