//! Time-frequency containers.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::FiveError;

/// Complex multichannel spectrum indexed by (bin, frame, channel).
///
/// Storage is row-major in that order, so the channel vector `x_fn` of one
/// time-frequency point is a contiguous slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTensor {
    bins: usize,
    frames: usize,
    channels: usize,
    data: Vec<Complex64>,
}

impl SpectralTensor {
    pub fn zeros(bins: usize, frames: usize, channels: usize) -> Self {
        Self {
            bins,
            frames,
            channels,
            data: vec![Complex64::new(0.0, 0.0); bins * frames * channels],
        }
    }

    pub fn from_vec(
        bins: usize,
        frames: usize,
        channels: usize,
        data: Vec<Complex64>,
    ) -> Result<Self, FiveError> {
        if data.len() != bins * frames * channels {
            return Err(FiveError::ShapeMismatch("tensor data length does not match dimensions"));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(FiveError::NonFinite);
        }
        Ok(Self {
            bins,
            frames,
            channels,
            data,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, bin: usize, frame: usize, channel: usize) -> Complex64 {
        self.data[(bin * self.frames + frame) * self.channels + channel]
    }

    pub fn set(&mut self, bin: usize, frame: usize, channel: usize, value: Complex64) {
        self.data[(bin * self.frames + frame) * self.channels + channel] = value;
    }

    /// The channel vector at one time-frequency point.
    pub fn vector(&self, bin: usize, frame: usize) -> &[Complex64] {
        let start = (bin * self.frames + frame) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn vector_mut(&mut self, bin: usize, frame: usize) -> &mut [Complex64] {
        let start = (bin * self.frames + frame) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    /// All frames of one bin, `frames * channels` values.
    pub fn bin_slice(&self, bin: usize) -> &[Complex64] {
        let len = self.frames * self.channels;
        &self.data[bin * len..(bin + 1) * len]
    }

    pub fn bin_slice_mut(&mut self, bin: usize) -> &mut [Complex64] {
        let len = self.frames * self.channels;
        &mut self.data[bin * len..(bin + 1) * len]
    }

    pub fn channel(&self, channel: usize) -> SourceSpectrum {
        let mut out = SourceSpectrum::zeros(self.bins, self.frames);
        for f in 0..self.bins {
            for n in 0..self.frames {
                out.set(f, n, self.get(f, n, channel));
            }
        }
        out
    }

    /// Stacks single-channel spectra of equal shape into one tensor.
    pub fn from_channels(channels: &[SourceSpectrum]) -> Result<Self, FiveError> {
        let first = channels
            .first()
            .ok_or(FiveError::ShapeMismatch("no channels given"))?;
        let (bins, frames) = (first.bins(), first.frames());
        if channels.iter().any(|c| c.bins() != bins || c.frames() != frames) {
            return Err(FiveError::ShapeMismatch("channel spectra differ in shape"));
        }
        let mut out = Self::zeros(bins, frames, channels.len());
        for (m, c) in channels.iter().enumerate() {
            for f in 0..bins {
                for n in 0..frames {
                    out.set(f, n, m, c.get(f, n));
                }
            }
        }
        Ok(out)
    }

    /// Copies frames `[start, start + count)` of every bin.
    pub fn frame_range(&self, start: usize, count: usize) -> Self {
        let mut out = Self::zeros(self.bins, count, self.channels);
        for f in 0..self.bins {
            for n in 0..count {
                out.vector_mut(f, n).copy_from_slice(self.vector(f, start + n));
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }
}

/// Single-channel complex spectrum indexed by (bin, frame).
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpectrum {
    bins: usize,
    frames: usize,
    data: Vec<Complex64>,
}

impl SourceSpectrum {
    pub fn zeros(bins: usize, frames: usize) -> Self {
        Self {
            bins,
            frames,
            data: vec![Complex64::new(0.0, 0.0); bins * frames],
        }
    }

    pub fn from_vec(bins: usize, frames: usize, data: Vec<Complex64>) -> Result<Self, FiveError> {
        if data.len() != bins * frames {
            return Err(FiveError::ShapeMismatch("spectrum data length does not match dimensions"));
        }
        Ok(Self { bins, frames, data })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[bin * self.frames + frame]
    }

    pub fn set(&mut self, bin: usize, frame: usize, value: Complex64) {
        self.data[bin * self.frames + frame] = value;
    }

    pub fn bin(&self, bin: usize) -> &[Complex64] {
        &self.data[bin * self.frames..(bin + 1) * self.frames]
    }

    pub fn bin_mut(&mut self, bin: usize) -> &mut [Complex64] {
        &mut self.data[bin * self.frames..(bin + 1) * self.frames]
    }

    pub fn into_tensor(self) -> SpectralTensor {
        SpectralTensor {
            bins: self.bins,
            frames: self.frames,
            channels: 1,
            data: self.data,
        }
    }
}
