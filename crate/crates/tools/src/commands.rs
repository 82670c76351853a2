//! The `extract`, `simulate`, `evaluate` and `bench` subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use five_core::five::extract_spectral;
use five_core::metrics::{evaluate_extraction, score};
use five_core::scene::{generate_scene, GroundTruthScene, SceneMixture};
use five_core::{Extractor, FiveConfig, MetricReport, SceneSignal, SceneSpec, SourceSpectrum};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::{append_metric_row, write_bench_report, write_extraction_report, BenchRow, MetricRow};
use crate::scene_io::{read_fiv, read_scene, write_fiv, write_scene};
use crate::stft::{analyze, synthesize, Spectrogram};
use crate::wav::{read_wave, write_wave, WavFormat};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => 1,
            CommandError::Runtime(_) => 2,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CommandError {
    CommandError::Runtime(e.to_string())
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CommandError> {
    p.as_deref()
        .ok_or_else(|| CommandError::Usage(format!("--{flag} is required")))
}

fn is_fiv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("fiv"))
}

fn monitored(cfg: &RunConfig) -> FiveConfig {
    FiveConfig {
        nll_monitoring: true,
        ..cfg.five_config()
    }
}

/// Extracts from a `.wav` or `.fiv` input into a file of the same kind and
/// writes the per-iteration report next to it unless `--report` is given.
pub fn run_extract(cfg: &RunConfig) -> Result<(), CommandError> {
    let input = required(&cfg.input, "input")?;
    let output = required(&cfg.output, "output")?;
    if !input.exists() {
        return Err(CommandError::Runtime(format!("input not found: {}", input.display())));
    }
    let five = monitored(cfg);
    five.validate().map_err(|e| CommandError::Usage(e.to_string()))?;
    let report = if is_fiv(input) {
        let mixture = read_fiv(input).map_err(runtime)?;
        let (source, report) = extract_spectral(&mixture, five).map_err(runtime)?;
        write_fiv(output, &source.into_tensor()).map_err(runtime)?;
        report
    } else {
        let wave = read_wave(input).map_err(runtime)?;
        let spec = analyze(&wave, &cfg.stft).map_err(runtime)?;
        let (source, report) = extract_spectral(&spec.tensor, five).map_err(runtime)?;
        let out = synthesize(&spec.from_source(source)).map_err(runtime)?;
        let written = write_wave(output, &out, WavFormat::Float32).map_err(runtime)?;
        debug_assert_eq!(written.clipped, 0);
        report
    };
    let report_path = cfg.report.clone().unwrap_or_else(|| output.with_extension("csv"));
    write_extraction_report(&report_path, &cfg.entries(), &report).map_err(runtime)
}

fn scene_spec(cfg: &RunConfig, seed: u64) -> SceneSpec {
    SceneSpec {
        seed,
        ..cfg.scene.clone()
    }
}

/// One scene directly in `--output`, or `scene_000`, `scene_001`, ... with
/// consecutive seeds when `--scenes` exceeds one.
pub fn run_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CommandError> {
    let output = required(&cfg.output, "output")?;
    let dirs: Vec<(PathBuf, u64)> = if cfg.scenes == 1 {
        vec![(output.to_path_buf(), cfg.seed)]
    } else {
        (0..cfg.scenes)
            .map(|i| (output.join(format!("scene_{i:03}")), cfg.seed + i as u64))
            .collect()
    };
    for (dir, seed) in &dirs {
        let scene = generate_scene(&scene_spec(cfg, *seed)).map_err(|e| CommandError::Usage(e.to_string()))?;
        write_scene(dir, &scene).map_err(runtime)?;
    }
    Ok(dirs.into_iter().map(|(d, _)| d).collect())
}

/// Drops `margin` samples at both ends, where the overlap-add is incomplete.
fn interior(x: &[f64], margin: usize) -> &[f64] {
    if x.len() > 2 * margin {
        &x[margin..x.len() - margin]
    } else {
        x
    }
}

fn time_channel(m: &SceneMixture) -> Result<Vec<f64>, CommandError> {
    match m {
        SceneMixture::Time(w) => Ok(w.channel(0)),
        SceneMixture::Spectral(_) => Err(CommandError::Runtime("expected a time-domain scene".into())),
    }
}

/// Scores a channel-1 estimate against a time-domain scene on the interior
/// `[frame_size, len - frame_size)`.
pub fn score_time(scene: &GroundTruthScene, estimate: &[f64], margin: usize) -> Result<MetricReport, CommandError> {
    let t = time_channel(&scene.target_component)?;
    let b = time_channel(&scene.background_component)?;
    let x = time_channel(&scene.mixture)?;
    if estimate.len() != x.len() {
        return Err(CommandError::Runtime(format!(
            "extracted signal has {} samples, scene has {}",
            estimate.len(),
            x.len()
        )));
    }
    score(
        interior(estimate, margin),
        interior(&t, margin),
        interior(&b, margin),
        interior(&x, margin),
    )
    .map_err(runtime)
}

pub fn evaluate_scene(
    scene: &GroundTruthScene,
    extracted: Option<&Path>,
    margin: usize,
) -> Result<MetricReport, CommandError> {
    match &scene.mixture {
        SceneMixture::Spectral(_) => {
            let estimate = match extracted {
                None => scene.reference_channel(),
                Some(p) => SceneSignal::Spectral(read_fiv(p).map_err(runtime)?.channel(0)),
            };
            evaluate_extraction(scene, &estimate).map_err(runtime)
        }
        SceneMixture::Time(w) => {
            let estimate = match extracted {
                None => w.channel(0),
                Some(p) => read_wave(p).map_err(runtime)?.channel(0),
            };
            score_time(scene, &estimate, margin)
        }
    }
}

/// Scores `--extracted` (or the unprocessed channel 1 when absent) against
/// the scene in `--input` and appends a row to `--report`.
pub fn run_evaluate(cfg: &RunConfig) -> Result<MetricRow, CommandError> {
    let dir = required(&cfg.input, "input")?;
    let scene = read_scene(dir).map_err(runtime)?;
    let metrics = evaluate_scene(&scene, cfg.extracted.as_deref(), cfg.stft.frame_size)?;
    let scene_id = dir
        .file_name()
        .map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    let row = match cfg.extracted {
        Some(_) => MetricRow {
            scene_id,
            algorithm: cfg.algorithm.clone(),
            iterations: cfg.iterations,
            metrics,
        },
        None => MetricRow {
            scene_id,
            algorithm: "unprocessed".into(),
            iterations: 0,
            metrics,
        },
    };
    if let Some(path) = &cfg.report {
        append_metric_row(path, &cfg.entries(), &row).map_err(runtime)?;
    }
    Ok(row)
}

/// Per-iteration trace of one benchmark scene.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchTrace {
    pub rows: Vec<BenchRow>,
    pub input_seconds: f64,
    /// Wall time of the algorithmic part for the full iteration count:
    /// analysis, whitening, iterations, projection back and synthesis.
    pub algorithm_seconds: f64,
}

fn scored(
    scene: &GroundTruthScene,
    out: &SourceSpectrum,
    spec: Option<&Spectrogram>,
    iteration: usize,
) -> Result<f64, CommandError> {
    // Before any update the output is channel 1 itself; scoring the
    // projected or resynthesized copy would only add round-off.
    let metrics = match spec {
        None if iteration == 0 => evaluate_extraction(scene, &scene.reference_channel()).map_err(runtime)?,
        None => evaluate_extraction(scene, &SceneSignal::Spectral(out.clone())).map_err(runtime)?,
        Some(s) if iteration == 0 => score_time(scene, &time_channel(&scene.mixture)?, s.config.frame_size)?,
        Some(s) => {
            let wave = synthesize(&s.from_source(out.clone())).map_err(runtime)?;
            score_time(scene, &wave.channel(0), s.config.frame_size)?
        }
    };
    Ok(metrics.delta_si_sdr_db)
}

/// Runs FIVE on one generated scene, recording cumulative runtime, NLL and
/// ΔSI-SDR after every iteration (row 0 is the initial estimate). Only the
/// algorithm is timed; scoring is not.
pub fn bench_scene(cfg: &RunConfig, seed: u64) -> Result<BenchTrace, CommandError> {
    let scene = generate_scene(&scene_spec(cfg, seed)).map_err(|e| CommandError::Usage(e.to_string()))?;
    let five = FiveConfig {
        max_iterations: cfg.iterations.max(1),
        ..cfg.five_config()
    };

    let start = Instant::now();
    let (spectrogram, mixture) = match &scene.mixture {
        SceneMixture::Spectral(t) => (None, t.clone()),
        SceneMixture::Time(w) => {
            let s = analyze(w, &cfg.stft).map_err(runtime)?;
            let t = s.tensor.clone();
            (Some(s), t)
        }
    };
    let mut ex = Extractor::new(&mixture, five.clone()).map_err(runtime)?;
    let mut elapsed = start.elapsed().as_secs_f64();

    let input_seconds = match &scene.mixture {
        SceneMixture::Time(w) => w.duration_seconds(),
        SceneMixture::Spectral(_) => cfg.scene.num_samples() as f64 / f64::from(cfg.scene.sample_rate),
    };
    let mut rows = Vec::with_capacity(cfg.iterations + 1);
    let mut record = |ex: &Extractor, iteration: usize, elapsed: f64| -> Result<(), CommandError> {
        let out = ex.output(&mixture).map_err(runtime)?;
        rows.push(BenchRow {
            seed,
            iteration,
            runtime_per_input_second: elapsed / input_seconds,
            nll: ex.nll(),
            delta_si_sdr: scored(&scene, &out, spectrogram.as_ref(), iteration)?,
        });
        Ok(())
    };
    record(&ex, 0, elapsed)?;
    for k in 1..=cfg.iterations {
        let t0 = Instant::now();
        ex.step().map_err(runtime)?;
        elapsed += t0.elapsed().as_secs_f64();
        record(&ex, k, elapsed)?;
    }

    // The output stage runs once per extraction; charge it to the total.
    let t0 = Instant::now();
    let out = ex.output(&mixture).map_err(runtime)?;
    if let Some(s) = &spectrogram {
        synthesize(&s.from_source(out)).map_err(runtime)?;
    }
    let algorithm_seconds = elapsed + t0.elapsed().as_secs_f64();
    Ok(BenchTrace {
        rows,
        input_seconds,
        algorithm_seconds,
    })
}

/// Seeds `seed .. seed + scenes` in parallel on at most `threads` workers.
pub fn run_bench(cfg: &RunConfig) -> Result<Vec<BenchTrace>, CommandError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(runtime)?;
    let traces: Vec<BenchTrace> = pool.install(|| {
        (0..cfg.scenes as u64)
            .into_par_iter()
            .map(|i| bench_scene(cfg, cfg.seed + i))
            .collect::<Result<_, _>>()
    })?;
    if let Some(path) = &cfg.report {
        let rows: Vec<BenchRow> = traces.iter().flat_map(|t| t.rows.iter().copied()).collect();
        write_bench_report(path, &cfg.entries(), &rows).map_err(runtime)?;
    }
    Ok(traces)
}
