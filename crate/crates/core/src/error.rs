use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: entries ({row}, {col}) deviate by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("triangular factor is invalid at diagonal entry {index}")]
    InvalidFactor { index: usize },
    #[error("near-zero diagonal entry {index} in triangular solve")]
    SingularFactor { index: usize },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiveError {
    #[error("not enough frames: {frames} frames for {channels} channels")]
    TooFewFrames { frames: usize, channels: usize },
    #[error("covariance of bin {bin} is rank deficient even after diagonal loading")]
    RankDeficient { bin: usize },
    #[error("weighted covariance of bin {bin} is degenerate: smallest eigenvalue {eigenvalue:e} below {threshold:e}")]
    DegenerateWeightedCovariance { bin: usize, eigenvalue: f64, threshold: f64 },
    #[error("linear algebra failure in bin {bin}: {source}")]
    Linalg { bin: usize, source: LinalgError },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("scene has no frequency-domain ground truth (convolutive mixing)")]
    NoSpectralGroundTruth,
    #[error("zero-energy reference signal")]
    ZeroReference,
}
