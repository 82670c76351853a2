//! analyze -> whiten -> iterate -> project back -> synthesize.

use five_core::five::extract_spectral;
use five_core::wave::MultichannelWave;
use five_core::{ExtractionReport, FiveConfig, FiveError};

use crate::stft::{analyze, synthesize, Spectrogram, StftConfig, StftError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Five(#[from] FiveError),
}

/// Single-channel spectrogram of the extracted source on the reference
/// channel's scale.
pub fn extract_spectrogram(
    spec: &Spectrogram,
    config: &FiveConfig,
) -> Result<(Spectrogram, ExtractionReport), PipelineError> {
    let (source, report) = extract_spectral(&spec.tensor, config.clone())?;
    Ok((spec.from_source(source), report))
}

pub fn extract_wave(
    wave: &MultichannelWave,
    stft: &StftConfig,
    config: &FiveConfig,
) -> Result<(MultichannelWave, ExtractionReport), PipelineError> {
    let spec = analyze(wave, stft)?;
    let (out, report) = extract_spectrogram(&spec, config)?;
    Ok((synthesize(&out)?, report))
}
