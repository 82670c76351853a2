//! PCM16 / float32 RIFF-WAVE reading and writing.

use std::io;
use std::path::{Path, PathBuf};

use five_core::wave::{MultichannelWave, WaveError};
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Float32,
}

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("no such file: {}", .0.display())]
    Missing(PathBuf),
    #[error("{}: unsupported codec ({detail})", path.display())]
    UnsupportedCodec { path: PathBuf, detail: String },
    #[error("{}: truncated chunk", .0.display())]
    Truncated(PathBuf),
    #[error("{}: malformed file ({detail})", path.display())]
    Malformed { path: PathBuf, detail: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Invalid { path: PathBuf, source: WaveError },
}

/// Samples written outside `[-1, 1]` in PCM16 mode are clipped and counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WriteReport {
    pub clipped: usize,
}

fn classify(path: &Path, err: hound::Error) -> WavError {
    let path = path.to_path_buf();
    match err {
        hound::Error::IoError(e) if e.kind() == io::ErrorKind::NotFound => WavError::Missing(path),
        // hound reports short sample reads as a custom error.
        hound::Error::IoError(e)
            if e.kind() == io::ErrorKind::UnexpectedEof || e.to_string().contains("read enough bytes") =>
        {
            WavError::Truncated(path)
        }
        hound::Error::IoError(source) => WavError::Io { path, source },
        hound::Error::Unsupported => WavError::UnsupportedCodec {
            path,
            detail: "format tag".into(),
        },
        hound::Error::TooWide | hound::Error::InvalidSampleFormat => WavError::UnsupportedCodec {
            path,
            detail: "sample format".into(),
        },
        hound::Error::UnfinishedSample => WavError::Truncated(path),
        hound::Error::FormatError(detail) => WavError::Malformed {
            path,
            detail: detail.into(),
        },
    }
}

pub fn read_wave(path: impl AsRef<Path>) -> Result<MultichannelWave, WavError> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| classify(path, e))?;
    let spec = reader.spec();
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>(),
        (format, bits) => {
            return Err(WavError::UnsupportedCodec {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    }
    .map_err(|e| classify(path, e))?;
    if !samples.len().is_multiple_of(usize::from(spec.channels)) {
        return Err(WavError::Truncated(path.to_path_buf()));
    }
    MultichannelWave::new(spec.sample_rate, usize::from(spec.channels), samples).map_err(|source| WavError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_wave(path: impl AsRef<Path>, wave: &MultichannelWave, format: WavFormat) -> Result<WriteReport, WavError> {
    let path = path.as_ref();
    let channels = u16::try_from(wave.channels()).map_err(|_| WavError::UnsupportedCodec {
        path: path.to_path_buf(),
        detail: "more than 65535 channels".into(),
    })?;
    let spec = WavSpec {
        channels,
        sample_rate: wave.sample_rate(),
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => SampleFormat::Int,
            WavFormat::Float32 => SampleFormat::Float,
        },
    };
    let io_err = |e| classify(path, e);
    let mut writer = WavWriter::create(path, spec).map_err(io_err)?;
    let mut report = WriteReport::default();
    for &x in wave.samples() {
        match format {
            WavFormat::Float32 => writer.write_sample(x as f32).map_err(io_err)?,
            WavFormat::Pcm16 => {
                if !(-1.0..=1.0).contains(&x) {
                    report.clipped += 1;
                }
                let v = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(v).map_err(io_err)?;
            }
        }
    }
    writer.finalize().map_err(io_err)?;
    Ok(report)
}
