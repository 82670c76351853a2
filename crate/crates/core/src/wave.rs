//! Time-domain multichannel signals.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("at least one channel is required")]
    NoChannels,
    #[error("sample count {samples} is not a multiple of the channel count {channels}")]
    RaggedChannels { samples: usize, channels: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

/// Real samples stored frame-interleaved: `samples[t * channels + m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultichannelWave {
    sample_rate: u32,
    channels: usize,
    samples: Vec<f64>,
}

impl MultichannelWave {
    pub fn new(sample_rate: u32, channels: usize, samples: Vec<f64>) -> Result<Self, WaveError> {
        if sample_rate == 0 {
            return Err(WaveError::ZeroSampleRate);
        }
        if channels == 0 {
            return Err(WaveError::NoChannels);
        }
        if !samples.len().is_multiple_of(channels) {
            return Err(WaveError::RaggedChannels {
                samples: samples.len(),
                channels,
            });
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(WaveError::NonFinite(i));
        }
        Ok(Self {
            sample_rate,
            channels,
            samples,
        })
    }

    /// Interleaves per-channel buffers of equal length.
    pub fn from_channels(sample_rate: u32, channels: &[Vec<f64>]) -> Result<Self, WaveError> {
        let len = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != len) {
            return Err(WaveError::RaggedChannels {
                samples: channels.iter().map(Vec::len).sum(),
                channels: channels.len(),
            });
        }
        let mut samples = Vec::with_capacity(len * channels.len());
        for t in 0..len {
            samples.extend(channels.iter().map(|c| c[t]));
        }
        Self::new(sample_rate, channels.len(), samples)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of samples per channel.
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn channel(&self, m: usize) -> Vec<f64> {
        self.samples.iter().skip(m).step_by(self.channels).copied().collect()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate)
    }
}
