//! Run configuration: `key=value` text files overlaid by command-line flags,
//! resolved into fully explicit settings.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use five_core::scene::DEFAULT_FIR_TAPS;
use five_core::{ContrastKind, Mixing, SceneSpec, TargetModel};

use crate::stft::{StftConfig, DEFAULT_FRAME_SIZE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}")]
    Value { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
}

pub type KeyValues = BTreeMap<String, String>;

/// Parses `key=value` lines; blank lines and `#` comments are skipped, later
/// keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<KeyValues, ConfigError> {
    let mut out = KeyValues::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_key_values(path: &std::path::Path) -> Result<KeyValues, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_key_values(&text)
}

const KNOWN_KEYS: &[&str] = &[
    "input",
    "output",
    "extracted",
    "report",
    "frame_size",
    "hop",
    "contrast",
    "iterations",
    "seed",
    "scenes",
    "channels",
    "interferers",
    "sinr_db",
    "bins",
    "frames",
    "mixing",
    "fir_taps",
    "target_model",
    "noise_fraction",
    "sample_rate",
    "algorithm",
    "threads",
];

fn get<T: FromStr>(map: &KeyValues, key: &str, default: T) -> Result<T, ConfigError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| ConfigError::Value {
            key: key.to_string(),
            value: v.clone(),
        }),
    }
}

fn get_with<T>(map: &KeyValues, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T, ConfigError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => parse(v).ok_or_else(|| ConfigError::Value {
            key: key.to_string(),
            value: v.clone(),
        }),
    }
}

/// Every setting of every subcommand with defaults materialized.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub extracted: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub stft: StftConfig,
    pub contrast: ContrastKind,
    pub iterations: usize,
    pub seed: u64,
    pub scenes: usize,
    pub scene: SceneSpec,
    pub algorithm: String,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_map(map: &KeyValues) -> Result<Self, ConfigError> {
        if let Some(k) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        let defaults = SceneSpec::default();
        let seed = get(map, "seed", 0u64)?;
        let bins = get(map, "bins", defaults.bins)?;
        let taps = get(map, "fir_taps", DEFAULT_FIR_TAPS)?;
        let mixing = get_with(map, "mixing", defaults.mixing, |v| match v {
            "instantaneous" => Some(Mixing::InstantaneousPerBin),
            "convolutive" => Some(Mixing::ConvolutiveFir { taps }),
            _ => None,
        })?;
        let scene = SceneSpec {
            channels: get(map, "channels", defaults.channels)?,
            bins,
            frames: get(map, "frames", defaults.frames)?,
            sample_rate: get(map, "sample_rate", defaults.sample_rate)?,
            target_model: get_with(map, "target_model", defaults.target_model, TargetModel::parse)?,
            interferers: get(map, "interferers", defaults.interferers)?,
            input_sinr_db: get(map, "sinr_db", defaults.input_sinr_db)?,
            uncorrelated_noise_fraction: get(map, "noise_fraction", defaults.uncorrelated_noise_fraction)?,
            seed,
            mixing,
        };
        scene.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        // Convolutive scenes are framed so that the STFT bins match `bins`.
        let default_frame = match mixing {
            Mixing::ConvolutiveFir { .. } => 2 * (bins - 1),
            Mixing::InstantaneousPerBin => DEFAULT_FRAME_SIZE,
        };
        let frame_size = get(map, "frame_size", default_frame)?;
        let hop = get(map, "hop", frame_size / 2)?;
        let stft = StftConfig::with_hop(frame_size, hop).map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let iterations = get(map, "iterations", five_core::five::DEFAULT_MAX_ITERATIONS)?;
        let scenes = get(map, "scenes", 1usize)?;
        if scenes == 0 {
            return Err(ConfigError::Invalid("scenes must be at least 1".into()));
        }
        let threads = match map.get("threads") {
            None => None,
            Some(_) => Some(get(map, "threads", 1usize)?).filter(|&t| t > 0),
        };
        Ok(Self {
            input: map.get("input").map(PathBuf::from),
            output: map.get("output").map(PathBuf::from),
            extracted: map.get("extracted").map(PathBuf::from),
            report: map.get("report").map(PathBuf::from),
            stft,
            contrast: get_with(map, "contrast", ContrastKind::Gauss, ContrastKind::parse)?,
            iterations,
            seed,
            scenes,
            scene,
            algorithm: map.get("algorithm").cloned().unwrap_or_else(|| "five".into()),
            threads,
        })
    }

    pub fn five_config(&self) -> five_core::FiveConfig {
        five_core::FiveConfig {
            contrast: self.contrast,
            max_iterations: self.iterations,
            ..five_core::FiveConfig::default()
        }
    }

    /// Resolved settings in a stable order, for report headers.
    pub fn entries(&self) -> Vec<(String, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        let s = &self.scene;
        let mut out = vec![
            ("input", path(&self.input)),
            ("output", path(&self.output)),
            ("extracted", path(&self.extracted)),
            ("report", path(&self.report)),
            ("frame_size", self.stft.frame_size.to_string()),
            ("hop", self.stft.hop.to_string()),
            ("contrast", self.contrast.name().to_string()),
            ("iterations", self.iterations.to_string()),
            ("seed", self.seed.to_string()),
            ("scenes", self.scenes.to_string()),
            ("channels", s.channels.to_string()),
            ("interferers", s.interferers.to_string()),
            ("sinr_db", s.input_sinr_db.to_string()),
            ("bins", s.bins.to_string()),
            ("frames", s.frames.to_string()),
            ("mixing", s.mixing.name().to_string()),
        ];
        if let Mixing::ConvolutiveFir { taps } = s.mixing {
            out.push(("fir_taps", taps.to_string()));
        }
        out.extend([
            ("target_model", s.target_model.name().to_string()),
            ("noise_fraction", s.uncorrelated_noise_fraction.to_string()),
            ("sample_rate", s.sample_rate.to_string()),
            ("algorithm", self.algorithm.clone()),
            ("threads", self.threads.map_or("auto".to_string(), |t| t.to_string())),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}
