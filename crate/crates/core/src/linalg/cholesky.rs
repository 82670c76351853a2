use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use super::{CMatrix, HermitianMatrix};
use crate::error::LinalgError;

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as loss of positive definiteness.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Diagonal entries below this fraction of the largest one make a triangular
/// solve ill-posed.
const SOLVE_TOLERANCE: f64 = 1e-15;

/// Upper-triangular factor `Q` with positive real diagonal and `A = Q^H Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    q: CMatrix,
}

/// Factors a Hermitian positive-definite matrix as `Q^H Q`.
pub fn cholesky(a: &HermitianMatrix) -> Result<CholeskyFactor, LinalgError> {
    let n = a.dim();
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let tolerance = PIVOT_TOLERANCE * max_diag;
    let mut q = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= q[(k, j)].norm_sqr();
        }
        if !(pivot > tolerance) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let d = pivot.sqrt();
        q[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut acc = a[(j, i)];
            for k in 0..j {
                acc -= q[(k, j)].conj() * q[(k, i)];
            }
            q[(j, i)] = acc / d;
        }
    }
    Ok(CholeskyFactor { q })
}

impl CholeskyFactor {
    /// Wraps an existing upper-triangular matrix with positive real diagonal.
    pub fn from_upper(q: CMatrix) -> Result<Self, LinalgError> {
        if q.rows() != q.cols() {
            return Err(LinalgError::NotSquare {
                rows: q.rows(),
                cols: q.cols(),
            });
        }
        let n = q.rows();
        for i in 0..n {
            let d = q[(i, i)];
            if !(d.re > 0.0) || d.im != 0.0 {
                return Err(LinalgError::InvalidFactor { index: i });
            }
            for j in 0..i {
                if q[(i, j)] != Complex64::new(0.0, 0.0) {
                    return Err(LinalgError::InvalidFactor { index: i });
                }
            }
        }
        Ok(Self { q })
    }

    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    /// `Q^H Q`.
    pub fn reconstruct(&self) -> CMatrix {
        self.q
            .adjoint()
            .matmul(&self.q)
            .expect("square factor")
    }

    /// `log |det Q|`.
    pub fn log_abs_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.q[(i, i)].re.ln()).sum()
    }

    fn check_diagonal(&self) -> Result<(), LinalgError> {
        let n = self.dim();
        let scale = (0..n).map(|i| self.q[(i, i)].re).fold(0.0, f64::max);
        for i in 0..n {
            if !(self.q[(i, i)].re > SOLVE_TOLERANCE * scale) {
                return Err(LinalgError::SingularFactor { index: i });
            }
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<(), LinalgError> {
        if len != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Solves `Q x = b` by back substitution.
    pub fn solve_upper_triangular(&self, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        self.check_len(b.len())?;
        self.check_diagonal()?;
        let n = self.dim();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.q[(i, j)] * x[j];
            }
            x[i] = acc / self.q[(i, i)].re;
        }
        Ok(x)
    }

    /// Solves `Q^H y = x` by forward substitution, i.e. applies `Q^{-H}`.
    pub fn apply_inverse_hermitian_transpose(
        &self,
        x: &[Complex64],
    ) -> Result<Vec<Complex64>, LinalgError> {
        self.check_len(x.len())?;
        self.check_diagonal()?;
        let mut y = x.to_vec();
        self.apply_inverse_hermitian_transpose_in_place(&mut y);
        Ok(y)
    }

    /// Unchecked variant for the hot loop; the caller guarantees a valid
    /// factor of matching dimension.
    pub(crate) fn apply_inverse_hermitian_transpose_in_place(&self, y: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= self.q[(k, i)].conj() * y[k];
            }
            y[i] = acc / self.q[(i, i)].re;
        }
    }
}
