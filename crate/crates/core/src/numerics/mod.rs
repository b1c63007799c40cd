//! Self-contained statistical and linear-algebra kernels.
//!
//! Dimensions here are small (a handful of material parameters), so the
//! dense routines favour clarity and exact reproducibility over cache
//! tricks: plain row-major storage, deterministic loop order, and explicit
//! RNG state threaded through every sampling call.

mod gaussian;
mod matrix;
mod special;
mod stats;

pub use gaussian::{kl_mvn, mvn_sample, GaussianSummary};
pub use matrix::{cholesky, CholeskyFactor, SquareMatrix};
pub use special::{f_survival, ln_beta_reg_lower, TailProbability};
pub use stats::{
    inverse_gamma_sample, pearson, percentile_linear, sample_covariance, sample_mean,
};

use thiserror::Error;

/// Failure modes of the shared kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite: pivot {value:.6e} at index {index}")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("sample is degenerate: zero variance")]
    DegenerateSample,
    #[error("need at least {required} observations, found {found}")]
    InsufficientData { required: usize, found: usize },
    #[error("covariance is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {delta:.3e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },
    #[error("covariance has negative diagonal entry {value:.6e} at index {index}")]
    NegativeVariance { index: usize, value: f64 },
}
