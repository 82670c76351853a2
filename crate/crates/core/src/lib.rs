//! Fast independent vector extraction.
//!
//! Pulls a single non-Gaussian target out of a multichannel mixture whose
//! background is Gaussian, by alternating between a per-frame activity
//! estimate and a per-bin max-SINR beamformer computed on pre-whitened data.
//! The update is the exact minimizer of a majorizer of the negative
//! log-likelihood, so the objective decreases monotonically.
//!
//! The crate is `no_std` (with `alloc`). File formats, the STFT front end and
//! the command-line tools live in the `five-tools` crate; enabling the `std`
//! feature here only adds wall-clock timing to [`five::Extractor::run`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod contrast;
pub mod error;
pub mod five;
pub mod linalg;
pub mod metrics;
pub mod scene;
pub mod tensor;
pub mod wave;

pub use num_complex::Complex64;

pub use contrast::{ContrastKind, ContrastModel, Weighting};
pub use error::{FiveError, LinalgError};
pub use five::{DemixingState, ExtractionReport, Extractor, FiveConfig, IterationRecord};
pub use linalg::{CMatrix, CholeskyFactor, EigenDecomposition, HermitianMatrix};
pub use metrics::MetricReport;
pub use scene::{GroundTruthScene, Mixing, SceneSignal, SceneSpec, TargetModel};
pub use tensor::{SourceSpectrum, SpectralTensor};
pub use wave::MultichannelWave;
