//! File formats, STFT front end and batch commands around `five-core`.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod scene_io;
pub mod stft;
pub mod wav;

pub use pipeline::{extract_wave, PipelineError};
pub use stft::{analyze, synthesize, Spectrogram, StftConfig, StftError};
pub use wav::{read_wave, write_wave, WavError, WavFormat};
