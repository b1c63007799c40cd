//! Correlation, noise-variance sampling, and small sample-statistics helpers.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::matrix::SquareMatrix;
use super::NumericsError;

/// Pearson correlation coefficient of two equally long samples.
///
/// Normalisations cancel, so the population/sample distinction does not
/// matter; a constant input has no defined correlation and is rejected.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, NumericsError> {
    if x.len() != y.len() {
        return Err(NumericsError::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(NumericsError::InsufficientData { required: 2, found: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(NumericsError::DegenerateSample);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Draws from an inverse gamma with shape `a` and scale `b`
/// (density proportional to `x^-(a+1) exp(-b/x)`), as the reciprocal of a
/// gamma draw with shape `a` and scale `1/b`.
pub fn inverse_gamma_sample<R: Rng>(a: f64, b: f64, rng: &mut R) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0, "inverse gamma parameters must be positive");
    let g = Gamma::new(a, 1.0 / b).expect("validated shape and scale");
    1.0 / g.sample(rng)
}

/// Quantile by linear interpolation between order statistics of an already
/// sorted sample; `q` in [0, 1] maps onto rank `q (n - 1)`.
pub fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = rank - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Columnwise mean of row-major `samples` (each row one observation of
/// dimension `dim`).
pub fn sample_mean(samples: &[f64], dim: usize) -> Vec<f64> {
    debug_assert!(dim > 0 && samples.len() % dim == 0);
    let n = samples.len() / dim;
    let mut mean = vec![0.0; dim];
    for row in samples.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    mean
}

/// Unbiased sample covariance (divisor n - 1) of row-major `samples`.
pub fn sample_covariance(samples: &[f64], dim: usize) -> Result<SquareMatrix, NumericsError> {
    debug_assert!(dim > 0 && samples.len() % dim == 0);
    let n = samples.len() / dim;
    if n < 2 {
        return Err(NumericsError::InsufficientData { required: 2, found: n });
    }
    let mean = sample_mean(samples, dim);
    let mut cov = SquareMatrix::zeros(dim);
    let mut dev = vec![0.0; dim];
    for row in samples.chunks_exact(dim) {
        for (d, (v, m)) in dev.iter_mut().zip(row.iter().zip(&mean)) {
            *d = v - m;
        }
        for i in 0..dim {
            for j in i..dim {
                cov.set(i, j, cov.get(i, j) + dev[i] * dev[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok(cov)
}
