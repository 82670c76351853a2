use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use super::{CMatrix, HermitianMatrix};
use crate::error::LinalgError;

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Converged when the off-diagonal Frobenius norm drops below this fraction
/// of the input's Frobenius norm.
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-14;

/// Eigenvalues in descending order with matching unit eigenvectors as columns.
///
/// Each eigenvector is rotated so that its largest-magnitude entry is real
/// and positive (first such entry on ties).
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = a.dim();
    let mut work = a.matrix().clone();
    let mut vectors = CMatrix::identity(n);
    let scale = work.frobenius_norm();
    if !scale.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let threshold = OFF_DIAGONAL_TOLERANCE * scale;

    let mut converged = false;
    let mut off = off_diagonal_norm(&work);
    for _ in 0..MAX_SWEEPS {
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut work, &mut vectors, p, q);
            }
        }
        off = off_diagonal_norm(&work);
    }
    if !converged && off > threshold {
        return Err(LinalgError::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(j, j)].re.total_cmp(&work[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| work[(i, i)].re).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = vectors.column(src);
        fix_phase(&mut v);
        eigenvectors.set_column(dst, &v);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Smallest eigenvalue and its eigenvector (same phase convention as
/// [`eig_hermitian`]).
pub fn smallest_eigenpair(a: &HermitianMatrix) -> Result<(f64, Vec<Complex64>), LinalgError> {
    let eig = eig_hermitian(a)?;
    let last = eig.dim() - 1;
    Ok((eig.eigenvalues[last], eig.eigenvector(last)))
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let n = m.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Applies the unitary rotation in the (p, q) plane that annihilates `a_pq`.
///
/// With `a_pq = |a_pq| e^{i alpha}` the rotation is
/// `J = [[c, s], [-s e^{-i alpha}, c e^{-i alpha}]]` and `A <- J^H A J`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let magnitude = apq.norm();
    if magnitude == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / magnitude;
    let theta = (aqq - app) / (2.0 * magnitude);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    let n = a.rows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * jqp;
        a[(k, q)] = akp * s + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * jqp.conj();
        a[(q, k)] = apk * s + aqk * jqq.conj();
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * jqp;
        v[(k, q)] = vkp * s + vkq * jqq;
    }
}

fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, x) in v.iter().enumerate() {
        let mag = x.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let rot = v[best].conj() / best_mag;
    for x in v.iter_mut() {
        *x *= rot;
    }
    v[best] = Complex64::new(v[best].re, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn residual(a: &HermitianMatrix, eig: &EigenDecomposition) -> f64 {
        (0..eig.dim())
            .map(|k| {
                let v = eig.eigenvector(k);
                let av = a.matrix().mul_vec(&v);
                av.iter()
                    .zip(&v)
                    .map(|(x, y)| (x - y * eig.eigenvalues[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let eig = eig_hermitian(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_sorted_descending() {
        let eig = eig_hermitian(&HermitianMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(eig.eigenvector(0), vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(eig.eigenvector(1), vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    }

    #[test]
    fn smallest_of_diagonal() {
        let (lambda, v) = smallest_eigenpair(&HermitianMatrix::from_diagonal(&[5.0, 2.0, 7.0])).unwrap();
        assert_eq!(lambda, 2.0);
        assert_eq!(v[1], Complex64::new(1.0, 0.0));
        assert_eq!(v[0].norm() + v[2].norm(), 0.0);
    }

    #[test]
    fn two_by_two_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let m = CMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let a = HermitianMatrix::new(m).unwrap();
        let eig = eig_hermitian(&a).unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(residual(&a, &eig) < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let eig = eig_hermitian(&HermitianMatrix::from_diagonal(&[0.0, 0.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0, 0.0]);
    }

    #[test]
    fn phase_convention_makes_largest_entry_real_positive() {
        let mut v = vec![Complex64::new(0.1, 0.2), Complex64::new(0.0, -0.9)];
        fix_phase(&mut v);
        assert!(v[1].im == 0.0 && v[1].re > 0.0);
    }
}
