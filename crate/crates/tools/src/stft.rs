//! One-sided STFT with a periodic Hamming window and weighted overlap-add
//! synthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use five_core::wave::MultichannelWave;
use five_core::{Complex64, SourceSpectrum, SpectralTensor};
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

pub const DEFAULT_FRAME_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StftError {
    #[error("frame size must be even and at least 2, got {0}")]
    FrameSize(usize),
    #[error("hop {hop} must divide frame size {frame_size} with at least two frames of overlap")]
    Hop { frame_size: usize, hop: usize },
    #[error("signal of {len} samples is shorter than one frame ({frame_size})")]
    TooShort { len: usize, frame_size: usize },
    #[error("spectrogram has {actual} bins, frame size {frame_size} needs {expected}")]
    BinCount { frame_size: usize, expected: usize, actual: usize },
    #[error("spectrogram covers at most {capacity} samples, asked for {length}")]
    Length { capacity: usize, length: usize },
    #[error("fft backend: {0}")]
    Fft(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StftConfig {
    pub frame_size: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self::new(DEFAULT_FRAME_SIZE).expect("default frame size is valid")
    }
}

impl StftConfig {
    /// Half-overlap configuration.
    pub fn new(frame_size: usize) -> Result<Self, StftError> {
        Self::with_hop(frame_size, frame_size / 2)
    }

    /// The hop must divide the frame into at least two parts, which makes
    /// the periodic Hamming window overlap-add to a constant.
    pub fn with_hop(frame_size: usize, hop: usize) -> Result<Self, StftError> {
        if frame_size < 2 || !frame_size.is_multiple_of(2) {
            return Err(StftError::FrameSize(frame_size));
        }
        if hop == 0 || !frame_size.is_multiple_of(hop) || frame_size / hop < 2 {
            return Err(StftError::Hop { frame_size, hop });
        }
        Ok(Self { frame_size, hop })
    }

    pub fn bins(&self) -> usize {
        self.frame_size / 2 + 1
    }

    /// Frames needed so that every one of `len` samples is covered, padding
    /// the tail with zeros.
    pub fn frames_for(&self, len: usize) -> Result<usize, StftError> {
        if len < self.frame_size {
            return Err(StftError::TooShort {
                len,
                frame_size: self.frame_size,
            });
        }
        Ok((len - self.frame_size).div_ceil(self.hop) + 1)
    }

    pub fn window(&self) -> Vec<f64> {
        hamming(self.frame_size)
    }
}

/// Periodic Hamming window `0.54 - 0.46 cos(2 pi n / N)`.
pub fn hamming(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// STFT data together with what is needed to invert it.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub tensor: SpectralTensor,
    pub config: StftConfig,
    pub sample_rate: u32,
    /// Original signal length in samples.
    pub length: usize,
}

impl Spectrogram {
    /// A single-channel spectrogram sharing this one's framing.
    pub fn with_tensor(&self, tensor: SpectralTensor) -> Self {
        Self {
            tensor,
            config: self.config,
            sample_rate: self.sample_rate,
            length: self.length,
        }
    }

    pub fn from_source(&self, source: SourceSpectrum) -> Self {
        self.with_tensor(source.into_tensor())
    }
}

struct Plan {
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

fn plan(frame_size: usize) -> Plan {
    let mut planner = RealFftPlanner::<f64>::new();
    Plan {
        forward: planner.plan_fft_forward(frame_size),
        inverse: planner.plan_fft_inverse(frame_size),
    }
}

fn analyze_channel(
    signal: &[f64],
    config: &StftConfig,
    window: &[f64],
    frames: usize,
    fft: &dyn RealToComplex<f64>,
) -> Result<Vec<Complex64>, StftError> {
    let (size, bins) = (config.frame_size, config.bins());
    let mut input = fft.make_input_vec();
    let mut output = fft.make_output_vec();
    let mut scratch = fft.make_scratch_vec();
    // (bin, frame) layout for one channel.
    let mut out = vec![Complex64::new(0.0, 0.0); bins * frames];
    for n in 0..frames {
        let start = n * config.hop;
        for (k, slot) in input.iter_mut().enumerate() {
            *slot = signal.get(start + k).copied().unwrap_or(0.0) * window[k];
        }
        fft.process_with_scratch(&mut input, &mut output, &mut scratch)
            .map_err(|e| StftError::Fft(e.to_string()))?;
        for (f, v) in output.iter().enumerate() {
            out[f * frames + n] = *v;
        }
    }
    debug_assert_eq!(size / 2 + 1, bins);
    Ok(out)
}

pub fn analyze(wave: &MultichannelWave, config: &StftConfig) -> Result<Spectrogram, StftError> {
    let frames = config.frames_for(wave.len())?;
    let bins = config.bins();
    let m = wave.channels();
    let window = config.window();
    let plan = plan(config.frame_size);
    let per_channel: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|c| analyze_channel(&wave.channel(c), config, &window, frames, plan.forward.as_ref()))
        .collect::<Result<_, _>>()?;
    let mut tensor = SpectralTensor::zeros(bins, frames, m);
    for (c, data) in per_channel.iter().enumerate() {
        for f in 0..bins {
            for n in 0..frames {
                tensor.set(f, n, c, data[f * frames + n]);
            }
        }
    }
    Ok(Spectrogram {
        tensor,
        config: *config,
        sample_rate: wave.sample_rate(),
        length: wave.len(),
    })
}

/// Weighted overlap-add with the analysis window, normalized per sample by
/// the accumulated squared window.
pub fn synthesize(spec: &Spectrogram) -> Result<MultichannelWave, StftError> {
    let config = spec.config;
    let t = &spec.tensor;
    if t.bins() != config.bins() {
        return Err(StftError::BinCount {
            frame_size: config.frame_size,
            expected: config.bins(),
            actual: t.bins(),
        });
    }
    let capacity = (t.frames().saturating_sub(1)) * config.hop + config.frame_size;
    if spec.length > capacity {
        return Err(StftError::Length {
            capacity,
            length: spec.length,
        });
    }
    let window = config.window();
    let plan = plan(config.frame_size);
    let mut norm = vec![0.0; capacity];
    for n in 0..t.frames() {
        for (k, w) in window.iter().enumerate() {
            norm[n * config.hop + k] += w * w;
        }
    }
    let channels: Vec<Vec<f64>> = (0..t.channels())
        .into_par_iter()
        .map(|c| {
            let ifft = plan.inverse.as_ref();
            let mut input = ifft.make_input_vec();
            let mut output = ifft.make_output_vec();
            let mut scratch = ifft.make_scratch_vec();
            let mut acc = vec![0.0; capacity];
            let last = input.len() - 1;
            for n in 0..t.frames() {
                for (f, slot) in input.iter_mut().enumerate() {
                    *slot = t.get(f, n, c);
                }
                // A real frame has real DC and Nyquist bins.
                input[0].im = 0.0;
                input[last].im = 0.0;
                ifft.process_with_scratch(&mut input, &mut output, &mut scratch)
                    .map_err(|e| StftError::Fft(e.to_string()))?;
                let start = n * config.hop;
                for (k, (y, w)) in output.iter().zip(&window).enumerate() {
                    acc[start + k] += y * w / config.frame_size as f64;
                }
            }
            Ok(acc[..spec.length]
                .iter()
                .zip(&norm)
                .map(|(y, d)| if *d > 0.0 { y / d } else { 0.0 })
                .collect())
        })
        .collect::<Result<_, StftError>>()?;
    Ok(MultichannelWave::from_channels(spec.sample_rate, &channels).expect("finite overlap-add output"))
}
