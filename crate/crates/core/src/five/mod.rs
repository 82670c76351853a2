//! The extraction algorithm.
//!
//! Data is pre-whitened once per bin (`x~ = Q^{-H} x` with `C = Q^H Q`), so
//! the max-SINR beamformer for a background estimate `V~` is the eigenvector
//! of the *smallest* eigenvalue of `V~`. Each iteration:
//!
//! 1. weights every frame by `phi(r_n)` of the current activity,
//! 2. forms `V~_f = (1/N) sum_n phi(r_n) x~ x~^H` per bin,
//! 3. sets `w_f = lambda_min^{-1/2} r_min`,
//! 4. recomputes `s_fn = w_f^H x~_fn` and the activity `r_n = ||s_n||`.
//!
//! The remaining eigenvectors of `V~_f` complete the demixing matrix
//! `W_f = [w_f, J_f]^H`; they are never needed for the update itself but are
//! kept so that the objective and the stationarity residual can be evaluated.

mod extractor;

pub use extractor::{extract_spectral_with_clock, ExtractionReport, Extractor, IterationRecord};
#[cfg(feature = "std")]
pub use extractor::extract_spectral;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::contrast::{ContrastKind, ContrastModel, Weighting};
use crate::error::FiveError;
use crate::linalg::{
    cholesky, dot_h, eig_hermitian, log_abs_det, norm, CMatrix, CholeskyFactor, EigenDecomposition,
    HermitianMatrix,
};
use crate::tensor::{SourceSpectrum, SpectralTensor};

pub const DEFAULT_MAX_ITERATIONS: usize = 3;
pub const DEFAULT_REGULARIZATION: f64 = 1e-10;
pub const DEFAULT_ACTIVITY_FLOOR: f64 = 1e-12;
pub const DEFAULT_EARLY_STOP: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct FiveConfig {
    pub contrast: ContrastKind,
    pub max_iterations: usize,
    /// Diagonal loading `eps * trace(V) / M`, applied only after a failed
    /// factorization or a degenerate smallest eigenvalue.
    pub regularization: f64,
    /// Lower bound on `r_n` before evaluating `phi` or `G`.
    pub activity_floor: f64,
    /// Evaluate the objective and the stationarity residual after every
    /// iteration.
    pub nll_monitoring: bool,
    /// Channel whose whitened signal seeds the first activity estimate and
    /// onto which the output is projected back.
    pub reference_channel: usize,
    /// Stop once `max_f ||w_f(new) - w_f(old)||` drops below this value.
    pub early_stop: Option<f64>,
}

impl Default for FiveConfig {
    fn default() -> Self {
        Self {
            contrast: ContrastKind::Gauss,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            regularization: DEFAULT_REGULARIZATION,
            activity_floor: DEFAULT_ACTIVITY_FLOOR,
            nll_monitoring: false,
            reference_channel: 0,
            early_stop: None,
        }
    }
}

impl FiveConfig {
    pub fn validate(&self) -> Result<(), FiveError> {
        if self.max_iterations == 0 {
            return Err(FiveError::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.regularization >= 0.0) || !self.regularization.is_finite() {
            return Err(FiveError::InvalidConfig("regularization must be finite and nonnegative"));
        }
        if !(self.activity_floor > 0.0) || !self.activity_floor.is_finite() {
            return Err(FiveError::InvalidConfig("activity_floor must be positive"));
        }
        if let Some(tol) = self.early_stop {
            if !(tol > 0.0) {
                return Err(FiveError::InvalidConfig("early_stop tolerance must be positive"));
            }
        }
        Ok(())
    }
}

/// Everything that changes from one iteration to the next.
#[derive(Clone, Debug, PartialEq)]
pub struct DemixingState {
    /// `Q_f` with `C_f = Q_f^H Q_f`; fixed for the whole run.
    pub whiteners: Vec<CholeskyFactor>,
    /// `w_f` in whitened coordinates.
    pub filters: Vec<Vec<Complex64>>,
    /// `J_f` (M x M-1, orthonormal columns) in whitened coordinates.
    pub background: Vec<CMatrix>,
    /// `s_fn = w_f^H x~_fn`.
    pub extracted: SourceSpectrum,
    /// `r_n = sqrt(sum_f |s_fn|^2)`.
    pub activity: Vec<f64>,
    pub iteration: usize,
}

impl DemixingState {
    /// Starts from the whitened reference channel: `w_f = e_ref` and `J_f`
    /// the remaining unit vectors.
    pub fn initial(
        whitened: &SpectralTensor,
        whiteners: Vec<CholeskyFactor>,
        reference: usize,
    ) -> Result<Self, FiveError> {
        let m = whitened.channels();
        if reference >= m {
            return Err(FiveError::InvalidConfig("reference channel out of range"));
        }
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        w[reference] = Complex64::new(1.0, 0.0);
        let mut j = CMatrix::zeros(m, m - 1);
        for (col, row) in (0..m).filter(|&i| i != reference).enumerate() {
            j[(row, col)] = Complex64::new(1.0, 0.0);
        }
        let extracted = whitened.channel(reference);
        let activity = update_activity(&extracted);
        Ok(Self {
            whiteners,
            filters: vec![w; whitened.bins()],
            background: vec![j; whitened.bins()],
            extracted,
            activity,
            iteration: 0,
        })
    }

    /// Demixing filters in the original (unwhitened) coordinates,
    /// `w_f = Q_f^{-1} w~_f`, so that `s_fn = w_f^H x_fn`.
    pub fn unwhitened_filters(&self) -> Result<Vec<Vec<Complex64>>, FiveError> {
        self.whiteners
            .iter()
            .zip(&self.filters)
            .enumerate()
            .map(|(bin, (q, w))| {
                q.solve_upper_triangular(w)
                    .map_err(|source| FiveError::Linalg { bin, source })
            })
            .collect()
    }
}

/// Sample covariance `(1/N) sum_n x_fn x_fn^H` of one bin.
pub fn sample_covariance(spec: &SpectralTensor, bin: usize) -> HermitianMatrix {
    let scale = 1.0 / spec.frames() as f64;
    HermitianMatrix::from_outer_products(
        spec.channels(),
        (0..spec.frames()).map(|n| (scale, spec.vector(bin, n))),
    )
}

/// Whitens every bin by the Cholesky factor of its sample covariance.
///
/// `loading` is the relative diagonal loading tried once when the plain
/// factorization fails.
pub fn prewhiten(
    spec: &SpectralTensor,
    loading: f64,
) -> Result<(SpectralTensor, Vec<CholeskyFactor>), FiveError> {
    let (bins, frames, channels) = (spec.bins(), spec.frames(), spec.channels());
    if channels == 0 || bins == 0 {
        return Err(FiveError::ShapeMismatch("empty spectral tensor"));
    }
    if frames < channels {
        return Err(FiveError::TooFewFrames { frames, channels });
    }
    let mut whitened = spec.clone();
    let mut whiteners = Vec::with_capacity(bins);
    for f in 0..bins {
        let mut cov = sample_covariance(spec, f);
        let q = match cholesky(&cov) {
            Ok(q) => q,
            Err(_) => {
                cov.add_to_diagonal(loading * cov.trace() / channels as f64);
                cholesky(&cov).map_err(|_| FiveError::RankDeficient { bin: f })?
            }
        };
        for n in 0..frames {
            q.apply_inverse_hermitian_transpose_in_place(whitened.vector_mut(f, n));
        }
        whiteners.push(q);
    }
    Ok((whitened, whiteners))
}

/// `V~_f = (1/N) sum_n phi(max(r_n, floor)) x~_fn x~_fn^H`.
pub fn weighted_covariance<W: Weighting + ?Sized>(
    whitened: &SpectralTensor,
    activity: &[f64],
    weighting: &W,
    activity_floor: f64,
    bin: usize,
) -> HermitianMatrix {
    debug_assert_eq!(activity.len(), whitened.frames());
    let scale = 1.0 / whitened.frames() as f64;
    HermitianMatrix::from_outer_products(
        whitened.channels(),
        activity.iter().enumerate().map(|(n, &r)| {
            (
                scale * weighting.phi(r.max(activity_floor)),
                whitened.vector(bin, n),
            )
        }),
    )
}

/// `r_n = sqrt(sum_f |s_fn|^2)`.
pub fn update_activity(extracted: &SourceSpectrum) -> Vec<f64> {
    let mut acc = vec![0.0; extracted.frames()];
    for f in 0..extracted.bins() {
        for (a, s) in acc.iter_mut().zip(extracted.bin(f)) {
            *a += s.norm_sqr();
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Eigendecomposition of a weighted covariance with one diagonal-loading
/// retry, returning the decomposition whose smallest eigenvalue clears
/// `eps * trace / M`.
fn bin_eigen(
    mut v: HermitianMatrix,
    regularization: f64,
    bin: usize,
) -> Result<(HermitianMatrix, EigenDecomposition), FiveError> {
    let m = v.dim();
    let threshold = regularization * v.trace() / m as f64;
    let acceptable = |e: &EigenDecomposition| e.eigenvalues[m - 1] > threshold;
    match eig_hermitian(&v) {
        Ok(e) if acceptable(&e) => return Ok((v, e)),
        _ => {}
    }
    v.add_to_diagonal(threshold);
    let e = eig_hermitian(&v).map_err(|source| FiveError::Linalg { bin, source })?;
    if !acceptable(&e) {
        return Err(FiveError::DegenerateWeightedCovariance {
            bin,
            eigenvalue: e.eigenvalues[m - 1],
            threshold,
        });
    }
    Ok((v, e))
}

/// One full pass over all bins followed by the activity update.
pub fn five_iteration(
    state: &DemixingState,
    whitened: &SpectralTensor,
    contrast: &ContrastModel,
    config: &FiveConfig,
) -> Result<DemixingState, FiveError> {
    let (bins, frames, m) = (whitened.bins(), whitened.frames(), whitened.channels());
    let mut filters = Vec::with_capacity(bins);
    let mut background = Vec::with_capacity(bins);
    let mut extracted = SourceSpectrum::zeros(bins, frames);
    for f in 0..bins {
        let v = weighted_covariance(whitened, &state.activity, contrast, config.activity_floor, f);
        let (_, eig) = bin_eigen(v, config.regularization, f)?;
        let lambda = eig.eigenvalues[m - 1];
        let w: Vec<Complex64> = eig
            .eigenvector(m - 1)
            .into_iter()
            .map(|x| x / lambda.sqrt())
            .collect();
        let mut j = CMatrix::zeros(m, m - 1);
        for k in 0..m - 1 {
            j.set_column(k, &eig.eigenvector(k));
        }
        for (n, s) in extracted.bin_mut(f).iter_mut().enumerate() {
            *s = dot_h(&w, whitened.vector(f, n));
        }
        filters.push(w);
        background.push(j);
    }
    let activity = update_activity(&extracted);
    Ok(DemixingState {
        whiteners: state.whiteners.clone(),
        filters,
        background,
        extracted,
        activity,
        iteration: state.iteration + 1,
    })
}

/// `max_f ||w_f(a) - w_f(b)||`.
pub fn max_filter_change(a: &DemixingState, b: &DemixingState) -> f64 {
    a.filters
        .iter()
        .zip(&b.filters)
        .map(|(x, y)| {
            let diff: Vec<Complex64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            norm(&diff)
        })
        .fold(0.0, f64::max)
}

/// Negative log-likelihood with unit background covariance after demixing:
///
/// `L = -2N sum_f log|det W_f| + sum_n G(r_n) + sum_{f,n} ||J_f^H x_fn||^2`
///
/// evaluated in whitened coordinates, with `W_f = W~_f Q_f^{-H}` so the
/// constant `2N sum_f log|det Q_f|` is included.
pub fn evaluate_nll(
    state: &DemixingState,
    whitened: &SpectralTensor,
    contrast: &ContrastModel,
    activity_floor: f64,
) -> f64 {
    let (bins, frames) = (whitened.bins(), whitened.frames());
    let n = frames as f64;
    let mut total = 0.0;
    for f in 0..bins {
        let demix = demixing_columns(&state.filters[f], &state.background[f]);
        let log_det = log_abs_det(&demix).unwrap_or(f64::NEG_INFINITY);
        total += -2.0 * n * log_det + 2.0 * n * state.whiteners[f].log_abs_det();
        let j = &state.background[f];
        let columns: Vec<Vec<Complex64>> = (0..j.cols()).map(|k| j.column(k)).collect();
        for t in 0..frames {
            let x = whitened.vector(f, t);
            total += columns.iter().map(|c| dot_h(c, x).norm_sqr()).sum::<f64>();
        }
    }
    total
        + state
            .activity
            .iter()
            .map(|&r| contrast.g_floored(r, activity_floor))
            .sum::<f64>()
}

/// `[w, J]` as an M x M matrix.
fn demixing_columns(w: &[Complex64], j: &CMatrix) -> CMatrix {
    let m = w.len();
    CMatrix::from_fn(m, m, |row, col| if col == 0 { w[row] } else { j[(row, col - 1)] })
}

/// Frobenius norm of `[w, J]^H [V w, C J] - diag(1, I)` for one bin.
pub fn head_residual_bin(
    w: &[Complex64],
    j: &CMatrix,
    weighted: &HermitianMatrix,
    covariance: &HermitianMatrix,
) -> f64 {
    let m = w.len();
    let demix = demixing_columns(w, j);
    let vw = weighted.matrix().mul_vec(w);
    let cj = covariance.matrix().matmul(j).expect("matching dimensions");
    let rhs = CMatrix::from_fn(m, m, |row, col| if col == 0 { vw[row] } else { cj[(row, col - 1)] });
    let mut product = demix.adjoint().matmul(&rhs).expect("square");
    for i in 0..m {
        product[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    product.frobenius_norm()
}

/// Largest stationarity residual over bins, with `V~_f` built from the
/// state's current activity.
pub fn head_residual(
    state: &DemixingState,
    whitened: &SpectralTensor,
    contrast: &ContrastModel,
    activity_floor: f64,
) -> f64 {
    (0..whitened.bins())
        .map(|f| {
            let v = weighted_covariance(whitened, &state.activity, contrast, activity_floor, f);
            let c = sample_covariance(whitened, f);
            head_residual_bin(&state.filters[f], &state.background[f], &v, &c)
        })
        .fold(0.0, f64::max)
}

/// `s_fn = w_f^H x_fn` for one filter per bin in the coordinates of `spec`.
pub fn apply_filters(spec: &SpectralTensor, filters: &[Vec<Complex64>]) -> Result<SourceSpectrum, FiveError> {
    if filters.len() != spec.bins() || filters.iter().any(|w| w.len() != spec.channels()) {
        return Err(FiveError::ShapeMismatch("one filter of length M per bin is required"));
    }
    let mut out = SourceSpectrum::zeros(spec.bins(), spec.frames());
    for (f, w) in filters.iter().enumerate() {
        for (n, s) in out.bin_mut(f).iter_mut().enumerate() {
            *s = dot_h(w, spec.vector(f, n));
        }
    }
    Ok(out)
}

/// Rescales each bin of `extracted` by the least-squares fit
/// `a_f = sum_n x_ref,fn s*_fn / sum_n |s_fn|^2` to the reference channel.
/// Bins with energy below `floor` pass through unchanged.
pub fn project_back(
    extracted: &SourceSpectrum,
    original: &SpectralTensor,
    reference: usize,
    floor: f64,
) -> Result<SourceSpectrum, FiveError> {
    if extracted.bins() != original.bins() || extracted.frames() != original.frames() {
        return Err(FiveError::ShapeMismatch("extracted signal and mixture differ in shape"));
    }
    if reference >= original.channels() {
        return Err(FiveError::InvalidConfig("reference channel out of range"));
    }
    let mut out = extracted.clone();
    for f in 0..extracted.bins() {
        let s = extracted.bin(f);
        let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        if energy < floor {
            continue;
        }
        let cross: Complex64 = s
            .iter()
            .enumerate()
            .map(|(n, v)| original.get(f, n, reference) * v.conj())
            .sum();
        let a = cross / energy;
        for v in out.bin_mut(f) {
            *v *= a;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
