//! Dense complex Hermitian linear algebra for small (M <= 8) matrices.
//!
//! Everything here is straightforward loops over row-major storage; the
//! extractor calls these once per frequency bin per iteration.

mod cholesky;
mod eigen;
mod matrix;

pub use cholesky::{cholesky, CholeskyFactor};
pub use eigen::{eig_hermitian, smallest_eigenpair, EigenDecomposition, MAX_SWEEPS};
pub use matrix::{log_abs_det, CMatrix, HermitianMatrix};

use num_complex::Complex64;

/// Inner product `a^H b`.
pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}
