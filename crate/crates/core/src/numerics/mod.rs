//! Dense arithmetic, activations, seeded randomness and a central-difference
//! gradient checker.

mod matrix;
mod rng;

pub(crate) use matrix::gemm;
pub use matrix::Matrix;
pub use rng::SeededRng;

use crate::error::{ClamError, Result};

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ClamError::Numeric(format!("{what} contains NaN or infinity")))
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(ClamError::dim("softmax of an empty vector"));
    }
    check_finite(v, "softmax input")?;
    Ok(softmax_unchecked(v))
}

/// Softmax for inputs already known to be finite and non-empty.
pub(crate) fn softmax_unchecked(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    out
}

/// `log Σ exp(v_i)`, stable.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let Some((arg, &max)) = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return f64::NEG_INFINITY;
    };
    if !max.is_finite() {
        return max;
    }
    let tail: f64 = v
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != arg)
        .map(|(_, x)| (x - max).exp())
        .sum();
    max + tail.ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gated attention activation `tanh(Va·h) ⊙ sigm(Ua·h)` for a single
/// embedded instance `h`. `ua` and `va` must share a shape `(A, h.len())`.
pub fn gated_activation(h: &[f64], ua: &Matrix, va: &Matrix) -> Result<Vec<f64>> {
    if ua.shape() != va.shape() || ua.cols() != h.len() {
        return Err(ClamError::dim(format!(
            "gated activation with h of length {}, Ua {:?}, Va {:?}",
            h.len(),
            ua.shape(),
            va.shape()
        )));
    }
    let out = ua
        .iter_rows()
        .zip(va.iter_rows())
        .map(|(u, v)| {
            let gate = sigmoid(dot(u, h));
            dot(v, h).tanh() * gate
        })
        .collect::<Vec<_>>();
    check_finite(&out, "gated activation")?;
    Ok(out)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max relative error between central differences of `f` at `x` and
/// `analytic_grad`, over every coordinate:
/// `max_i |(f(x+eps·e_i) − f(x−eps·e_i))/(2·eps) − g_i| / max(1, |g_i|)`.
pub fn finite_diff_check<F>(f: F, x: &[f64], analytic_grad: &[f64], eps: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let coords: Vec<usize> = (0..x.len()).collect();
    finite_diff_check_coords(f, x, analytic_grad, eps, &coords)
}

/// [`finite_diff_check`] restricted to a subset of coordinates, for parameter
/// blocks too large to probe exhaustively.
pub fn finite_diff_check_coords<F>(
    mut f: F,
    x: &[f64],
    analytic_grad: &[f64],
    eps: f64,
    coords: &[usize],
) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(ClamError::config(format!("step size {eps} must be positive")));
    }
    if analytic_grad.len() != x.len() {
        return Err(ClamError::dim(format!(
            "gradient of length {} for {} parameters",
            analytic_grad.len(),
            x.len()
        )));
    }
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        if i >= x.len() {
            return Err(ClamError::dim(format!("coordinate {i} out of range")));
        }
        probe[i] = x[i] + eps;
        let plus = f(&probe);
        probe[i] = x[i] - eps;
        let minus = f(&probe);
        probe[i] = x[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(ClamError::Numeric(format!(
                "objective not finite around coordinate {i}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let g = analytic_grad[i];
        worst = worst.max((numeric - g).abs() / g.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        for x in [-1e300, -3.0, 0.0, 7.5, 1e300] {
            assert_eq!(softmax(&[x]).unwrap(), vec![1.0]);
        }
        let p = softmax(&[0.0, 3f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn softmax_errors() {
        assert!(matches!(softmax(&[]), Err(ClamError::Dimension(_))));
        assert!(matches!(softmax(&[0.0, f64::NAN]), Err(ClamError::Numeric(_))));
        assert!(matches!(softmax(&[f64::INFINITY]), Err(ClamError::Numeric(_))));
    }

    #[test]
    fn softmax_is_shift_invariant_and_normalized() {
        let mut rng = SeededRng::new(12);
        for _ in 0..500 {
            let n = rng.range_inclusive(1, 12);
            let v: Vec<f64> = (0..n).map(|_| 20.0 * rng.normal()).collect();
            let c = 100.0 * rng.normal();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let p = softmax(&v).unwrap();
            let q = softmax(&shifted).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x > 0.0 && x <= 1.0));
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gated_activation_zero_cases() {
        let mut rng = SeededRng::new(2);
        let ua = Matrix::from_vec(4, 6, (0..24).map(|_| rng.normal()).collect()).unwrap();
        let va = Matrix::from_vec(4, 6, (0..24).map(|_| rng.normal()).collect()).unwrap();
        assert_eq!(gated_activation(&[0.0; 6], &ua, &va).unwrap(), vec![0.0; 4]);
        let z = Matrix::zeros(4, 6);
        let h: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        assert_eq!(gated_activation(&h, &z, &z).unwrap(), vec![0.0; 4]);
        assert!(gated_activation(&h[..5], &ua, &va).is_err());
    }

    #[test]
    fn gated_activation_matches_scalar_loop() {
        let mut rng = SeededRng::new(7);
        let (a, d) = (256, 512);
        let ua = Matrix::from_vec(a, d, (0..a * d).map(|_| 0.05 * rng.normal()).collect()).unwrap();
        let va = Matrix::from_vec(a, d, (0..a * d).map(|_| 0.05 * rng.normal()).collect()).unwrap();
        let h: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let got = gated_activation(&h, &ua, &va).unwrap();
        for i in 0..a {
            let mut su = 0.0;
            let mut sv = 0.0;
            for j in 0..d {
                su += ua.get(i, j) * h[j];
                sv += va.get(i, j) * h[j];
            }
            let expected = sv.tanh() * (1.0 / (1.0 + (-su).exp()));
            assert!((got[i] - expected).abs() < 1e-12);
            assert!(got[i] > -1.0 && got[i] < 1.0);
        }
    }

    #[test]
    fn finite_diff_examples() {
        let err = finite_diff_check(|x| x[0] * x[0], &[3.0], &[6.0], 1e-5).unwrap();
        assert!(err < 1e-8);
        let err = finite_diff_check(|_| 4.2, &[1.0, -2.0], &[0.0, 0.0], 1e-4).unwrap();
        assert_eq!(err, 0.0);
        assert!(finite_diff_check(|x| x[0].ln(), &[0.0], &[1.0], 1e-3).is_err());
        assert!(finite_diff_check(|x| x[0], &[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }
}
