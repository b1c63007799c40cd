//! Dense symmetric matrices and their Cholesky factorisation.

use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Dense square matrix with row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from nested rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(NumericsError::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Diagonal matrix from the given variances.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add_diagonal(&self, s: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.set(i, i, m.get(i, i) + s);
        }
        m
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`, zero for symmetric input.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Product A x for a vector of matching length.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if x.len() != self.dim {
            return Err(NumericsError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Quadratic form x' A x.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64, NumericsError> {
        let ax = self.mul_vec(x)?;
        Ok(x.iter().zip(&ax).map(|(a, b)| a * b).sum())
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L'`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    /// Row-major lower triangle; entries above the diagonal are zero.
    data: Vec<f64>,
}

impl CholeskyFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Applies `L z` to a vector, the map that colours standard normal draws.
    pub fn mul_vec(&self, z: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if z.len() != self.dim {
            return Err(NumericsError::DimensionMismatch { expected: self.dim, found: z.len() });
        }
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.get(i, j) * z[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Solves `A x = b` via the two triangular solves `L y = b`, `L' x = y`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if b.len() != self.dim {
            return Err(NumericsError::DimensionMismatch { expected: self.dim, found: b.len() });
        }
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.get(i, j) * y[j];
            }
            y[i] = acc / self.get(i, i);
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.get(j, i) * x[j];
            }
            x[i] = acc / self.get(i, i);
        }
        Ok(x)
    }

    /// log determinant of the factored matrix: `2 sum ln L_ii`.
    pub fn ln_det(&self) -> f64 {
        (0..self.dim).map(|i| 2.0 * self.get(i, i).ln()).sum()
    }

    /// Factor of the congruence `D A D` for a positive diagonal `D`: scaling
    /// row `i` of `L` by `d_i` keeps it lower triangular with positive pivots.
    pub fn row_scale(&self, d: &[f64]) -> Result<Self, NumericsError> {
        if d.len() != self.dim {
            return Err(NumericsError::DimensionMismatch { expected: self.dim, found: d.len() });
        }
        if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
            return Err(NumericsError::NotPositiveDefinite { index: i, value: d[i] });
        }
        let mut data = self.data.clone();
        for i in 0..self.dim {
            for j in 0..=i {
                data[i * self.dim + j] *= d[i];
            }
        }
        Ok(Self { dim: self.dim, data })
    }

    /// Reconstructs `L L'`, mainly for round-trip checks.
    pub fn reconstruct(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.dim, |i, j| {
            let mut acc = 0.0;
            for k in 0..=i.min(j) {
                acc += self.get(i, k) * self.get(j, k);
            }
            acc
        })
    }
}

/// Cholesky factorisation of a symmetric positive-definite matrix.
///
/// Fails with the offending pivot index and value as soon as a pivot is
/// not strictly positive, which is the reject path the adaptive proposal
/// and divergence computations rely on.
pub fn cholesky(a: &SquareMatrix) -> Result<CholeskyFactor, NumericsError> {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if acc <= 0.0 || !acc.is_finite() {
                    return Err(NumericsError::NotPositiveDefinite { index: i, value: acc });
                }
                l[i * n + i] = acc.sqrt();
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    Ok(CholeskyFactor { dim: n, data: l })
}
