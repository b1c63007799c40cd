//! Multivariate normal sampling and divergence.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::matrix::{cholesky, CholeskyFactor, SquareMatrix};
use super::NumericsError;

/// Mean vector plus covariance matrix of a multivariate normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    mean: Vec<f64>,
    covariance: SquareMatrix,
}

impl GaussianSummary {
    /// Validates dimensions, symmetry (to 1e-10 relative of the largest
    /// diagonal entry), and nonnegative variances.
    pub fn new(mean: Vec<f64>, covariance: SquareMatrix) -> Result<Self, NumericsError> {
        if covariance.dim() != mean.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: mean.len(),
                found: covariance.dim(),
            });
        }
        let mut scale: f64 = 0.0;
        for i in 0..covariance.dim() {
            let v = covariance.get(i, i);
            if v < 0.0 {
                return Err(NumericsError::NegativeVariance { index: i, value: v });
            }
            scale = scale.max(v.abs());
        }
        let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
        for i in 0..covariance.dim() {
            for j in (i + 1)..covariance.dim() {
                let delta = (covariance.get(i, j) - covariance.get(j, i)).abs();
                if delta > tol {
                    return Err(NumericsError::NotSymmetric { i, j, delta });
                }
            }
        }
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SquareMatrix {
        &self.covariance
    }

    /// Marginal standard deviations, the square roots of the diagonal.
    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.covariance.get(i, i).sqrt()).collect()
    }
}

/// Draws `mean + L z` with `z` i.i.d. standard normal and `L` the
/// pre-factored covariance.
pub fn mvn_sample<R: Rng>(
    mean: &[f64],
    factor: &CholeskyFactor,
    rng: &mut R,
) -> Result<Vec<f64>, NumericsError> {
    if factor.dim() != mean.len() {
        return Err(NumericsError::DimensionMismatch { expected: mean.len(), found: factor.dim() });
    }
    let z: Vec<f64> = (0..mean.len()).map(|_| rng.sample(StandardNormal)).collect();
    let mut x = factor.mul_vec(&z)?;
    for (xi, mi) in x.iter_mut().zip(mean) {
        *xi += mi;
    }
    Ok(x)
}

/// Kullback-Leibler divergence D(a || b) between two multivariate normals,
/// in nats:
///
/// ```text
/// D = 0.5 [ ln(|S2|/|S1|) - d + tr(S2^-1 S1) + (m2-m1)' S2^-1 (m2-m1) ]
/// ```
///
/// Nonnegative, zero only for identical inputs, and asymmetric in general.
pub fn kl_mvn(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64, NumericsError> {
    let d = a.dim();
    if b.dim() != d {
        return Err(NumericsError::DimensionMismatch { expected: d, found: b.dim() });
    }
    let la = cholesky(a.covariance())?;
    let lb = cholesky(b.covariance())?;

    // tr(S2^-1 S1) column by column through the factored solve.
    let mut trace = 0.0;
    let mut col = vec![0.0; d];
    for j in 0..d {
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = a.covariance().get(i, j);
        }
        let x = lb.solve(&col)?;
        trace += x[j];
    }

    let diff: Vec<f64> = b.mean().iter().zip(a.mean()).map(|(m2, m1)| m2 - m1).collect();
    let w = lb.solve(&diff)?;
    let maha: f64 = diff.iter().zip(&w).map(|(d, w)| d * w).sum();

    Ok(0.5 * (lb.ln_det() - la.ln_det() - d as f64 + trace + maha))
}
