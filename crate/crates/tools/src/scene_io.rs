//! Scene directories: `scene.txt` with the generating spec, FIV1 tensors for
//! instantaneous scenes, float32 WAV for convolutive ones.
//!
//! FIV1 layout: magic `FIV1`, dims `d0 d1 d2` as little-endian u32, then
//! `d0 * d1 * d2` complex values as little-endian f64 pairs (re, im) in
//! row-major order.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use five_core::scene::{GroundTruthScene, SceneMixture};
use five_core::{Complex64, FiveError, HermitianMatrix, Mixing, SceneSpec, SpectralTensor};

use crate::config::{parse_key_values, ConfigError, KeyValues};
use crate::wav::{read_wave, write_wave, WavError, WavFormat};

const MAGIC: &[u8; 4] = b"FIV1";

pub const SPEC_FILE: &str = "scene.txt";
pub const TARGET_COVARIANCE_FILE: &str = "target_covariance.fiv";
pub const BACKGROUND_COVARIANCE_FILE: &str = "background_covariance.fiv";

#[derive(Debug, thiserror::Error)]
pub enum SceneIoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{}: {source}", path.display())]
    Spec { path: PathBuf, source: ConfigError },
    #[error(transparent)]
    Scene(#[from] FiveError),
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> SceneIoError + '_ {
    move |source| SceneIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_fiv(path: &Path, tensor: &SpectralTensor) -> Result<(), SceneIoError> {
    let dims = [tensor.bins(), tensor.frames(), tensor.channels()];
    let mut buf = Vec::with_capacity(16 + tensor.as_slice().len() * 16);
    buf.extend_from_slice(MAGIC);
    for d in dims {
        let d = u32::try_from(d).map_err(|_| SceneIoError::Format {
            path: path.to_path_buf(),
            detail: format!("dimension {d} does not fit in 32 bits"),
        })?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in tensor.as_slice() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&buf).map_err(io_err(path))
}

pub fn read_fiv(path: &Path) -> Result<SpectralTensor, SceneIoError> {
    let format = |detail: String| SceneIoError::Format {
        path: path.to_path_buf(),
        detail,
    };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(format("missing FIV1 header".into()));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes")) as usize;
    let (d0, d1, d2) = (dim(0), dim(1), dim(2));
    let count = d0
        .checked_mul(d1)
        .and_then(|x| x.checked_mul(d2))
        .ok_or_else(|| format("dimensions overflow".into()))?;
    let body = &bytes[16..];
    if body.len() != count * 16 {
        return Err(format(format!("expected {} payload bytes, found {}", count * 16, body.len())));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    SpectralTensor::from_vec(d0, d1, d2, data).map_err(|e| format(e.to_string()))
}

fn covariances_to_tensor(covs: &[HermitianMatrix]) -> SpectralTensor {
    let m = covs.first().map_or(0, HermitianMatrix::dim);
    let mut t = SpectralTensor::zeros(covs.len(), m, m);
    for (f, c) in covs.iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                t.set(f, i, j, c[(i, j)]);
            }
        }
    }
    t
}

fn tensor_to_covariances(path: &Path, t: &SpectralTensor) -> Result<Vec<HermitianMatrix>, SceneIoError> {
    if t.frames() != t.channels() {
        return Err(SceneIoError::Format {
            path: path.to_path_buf(),
            detail: "covariance slices must be square".into(),
        });
    }
    let m = t.channels();
    (0..t.bins())
        .map(|f| {
            let mat = five_core::CMatrix::from_fn(m, m, |i, j| t.get(f, i, j));
            HermitianMatrix::new(mat).map_err(|e| SceneIoError::Format {
                path: path.to_path_buf(),
                detail: format!("bin {f}: {e}"),
            })
        })
        .collect()
}

pub fn spec_to_text(spec: &SceneSpec) -> String {
    let mut lines = vec![
        format!("channels={}", spec.channels),
        format!("bins={}", spec.bins),
        format!("frames={}", spec.frames),
        format!("sample_rate={}", spec.sample_rate),
        format!("target_model={}", spec.target_model.name()),
        format!("interferers={}", spec.interferers),
        format!("sinr_db={}", spec.input_sinr_db),
        format!("noise_fraction={}", spec.uncorrelated_noise_fraction),
        format!("seed={}", spec.seed),
        format!("mixing={}", spec.mixing.name()),
    ];
    if let Mixing::ConvolutiveFir { taps } = spec.mixing {
        lines.push(format!("fir_taps={taps}"));
    }
    lines.join("\n") + "\n"
}

pub fn spec_from_map(map: &KeyValues) -> Result<SceneSpec, ConfigError> {
    crate::config::RunConfig::from_map(map).map(|c| c.scene)
}

fn component_name(kind: &str, mixing: Mixing) -> String {
    match mixing {
        Mixing::InstantaneousPerBin => format!("{kind}.fiv"),
        Mixing::ConvolutiveFir { .. } => format!("{kind}.wav"),
    }
}

fn write_component(path: &Path, m: &SceneMixture) -> Result<(), SceneIoError> {
    match m {
        SceneMixture::Spectral(t) => write_fiv(path, t),
        SceneMixture::Time(w) => write_wave(path, w, WavFormat::Float32).map(|_| ()).map_err(Into::into),
    }
}

fn read_component(path: &Path, mixing: Mixing) -> Result<SceneMixture, SceneIoError> {
    Ok(match mixing {
        Mixing::InstantaneousPerBin => SceneMixture::Spectral(read_fiv(path)?),
        Mixing::ConvolutiveFir { .. } => SceneMixture::Time(read_wave(path)?),
    })
}

/// Path of the multichannel mixture inside a scene directory.
pub fn mixture_path(dir: &Path, spec: &SceneSpec) -> PathBuf {
    dir.join(component_name("mixture", spec.mixing))
}

pub fn write_scene(dir: &Path, scene: &GroundTruthScene) -> Result<(), SceneIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let spec_path = dir.join(SPEC_FILE);
    fs::write(&spec_path, spec_to_text(&scene.spec)).map_err(io_err(&spec_path))?;
    let mixing = scene.spec.mixing;
    for (kind, m) in [
        ("mixture", &scene.mixture),
        ("target", &scene.target_component),
        ("background", &scene.background_component),
    ] {
        write_component(&dir.join(component_name(kind, mixing)), m)?;
    }
    if let Some(c) = &scene.target_covariance {
        write_fiv(&dir.join(TARGET_COVARIANCE_FILE), &covariances_to_tensor(c))?;
    }
    if let Some(c) = &scene.background_covariance {
        write_fiv(&dir.join(BACKGROUND_COVARIANCE_FILE), &covariances_to_tensor(c))?;
    }
    Ok(())
}

pub fn read_scene_spec(dir: &Path) -> Result<SceneSpec, SceneIoError> {
    let path = dir.join(SPEC_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let map = parse_key_values(&text).map_err(|source| SceneIoError::Spec {
        path: path.clone(),
        source,
    })?;
    spec_from_map(&map).map_err(|source| SceneIoError::Spec { path, source })
}

pub fn read_scene(dir: &Path) -> Result<GroundTruthScene, SceneIoError> {
    let spec = read_scene_spec(dir)?;
    let mixing = spec.mixing;
    let mixture = read_component(&dir.join(component_name("mixture", mixing)), mixing)?;
    let target_component = read_component(&dir.join(component_name("target", mixing)), mixing)?;
    let background_component = read_component(&dir.join(component_name("background", mixing)), mixing)?;
    let covariance = |name: &str| -> Result<Option<Vec<HermitianMatrix>>, SceneIoError> {
        let path = dir.join(name);
        if !path.exists() {
            return Ok(None);
        }
        let t = read_fiv(&path)?;
        tensor_to_covariances(&path, &t).map(Some)
    };
    Ok(GroundTruthScene {
        target_covariance: covariance(TARGET_COVARIANCE_FILE)?,
        background_covariance: covariance(BACKGROUND_COVARIANCE_FILE)?,
        spec,
        mixture,
        target_component,
        background_component,
    })
}
