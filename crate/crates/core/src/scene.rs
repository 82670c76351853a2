//! Synthetic mixtures with known ground truth.
//!
//! The target is a rank-1 spatial image `a_f s_fn` with `s_fn = g_n v_fn`:
//! circular Gaussian `v` modulated by a per-frame envelope `g`. The
//! background is `Q` stationary Gaussian interferers with rank-1 images plus
//! spatially white noise. Powers are set from expected values so that the
//! channel-1 SINR `sigma_T^2 / (Q sigma_I^2 + sigma_w^2)` matches the request.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};

use crate::error::FiveError;
use crate::linalg::{cholesky, eig_hermitian, CMatrix, HermitianMatrix};
use crate::tensor::{SourceSpectrum, SpectralTensor};
use crate::wave::MultichannelWave;

/// Half-width of the log-amplitude range of the time-varying Gauss envelope
/// (+-20 dB).
const LOG_ENVELOPE_RANGE: f64 = core::f64::consts::LN_10;

/// FIR amplitude decays by 60 dB over the filter length.
const FIR_DECAY_DB: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetModel {
    /// Exponentially distributed per-frame amplitude.
    LaplaceModulated,
    /// Log-uniform per-frame amplitude.
    GaussTimeVarying,
}

impl TargetModel {
    pub fn name(self) -> &'static str {
        match self {
            TargetModel::LaplaceModulated => "laplace_modulated",
            TargetModel::GaussTimeVarying => "gauss_timevarying",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "laplace_modulated" | "laplace" => Some(TargetModel::LaplaceModulated),
            "gauss_timevarying" | "gauss" => Some(TargetModel::GaussTimeVarying),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mixing {
    /// Independent random steering vector per bin, generated directly in
    /// the time-frequency domain.
    InstantaneousPerBin,
    /// Time-domain convolution with random exponentially decaying FIR
    /// filters of the given length.
    ConvolutiveFir { taps: usize },
}

pub const DEFAULT_FIR_TAPS: usize = 256;

impl Mixing {
    pub fn name(self) -> &'static str {
        match self {
            Mixing::InstantaneousPerBin => "instantaneous",
            Mixing::ConvolutiveFir { .. } => "convolutive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub channels: usize,
    pub bins: usize,
    pub frames: usize,
    pub sample_rate: u32,
    pub target_model: TargetModel,
    pub interferers: usize,
    pub input_sinr_db: f64,
    /// Share of the total noise-and-interference power that is spatially
    /// white noise.
    pub uncorrelated_noise_fraction: f64,
    pub seed: u64,
    pub mixing: Mixing,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            channels: 4,
            bins: 64,
            frames: 500,
            sample_rate: 16_000,
            target_model: TargetModel::LaplaceModulated,
            interferers: 10,
            input_sinr_db: 5.0,
            uncorrelated_noise_fraction: 0.01,
            seed: 0,
            mixing: Mixing::InstantaneousPerBin,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), FiveError> {
        if self.channels == 0 {
            return Err(FiveError::InvalidConfig("scene needs at least one channel"));
        }
        if self.bins == 0 {
            return Err(FiveError::InvalidConfig("scene needs at least one bin"));
        }
        if self.frames < self.channels {
            return Err(FiveError::InvalidConfig("scene needs at least as many frames as channels"));
        }
        if self.sample_rate == 0 {
            return Err(FiveError::InvalidConfig("sample rate must be positive"));
        }
        if !self.input_sinr_db.is_finite() {
            return Err(FiveError::InvalidConfig("input SINR must be finite"));
        }
        if !(0.0..=1.0).contains(&self.uncorrelated_noise_fraction) {
            return Err(FiveError::InvalidConfig("noise fraction must lie in [0, 1]"));
        }
        if let Mixing::ConvolutiveFir { taps } = self.mixing {
            if taps == 0 {
                return Err(FiveError::InvalidConfig("FIR filters need at least one tap"));
            }
            if self.bins < 2 {
                return Err(FiveError::InvalidConfig("convolutive scenes need at least two bins"));
            }
        }
        Ok(())
    }

    /// Time-domain length of a convolutive scene: exactly `frames` frames of
    /// a `2 (bins - 1)`-point STFT at half overlap.
    pub fn num_samples(&self) -> usize {
        (self.frames + 1) * self.bins.saturating_sub(1)
    }

    fn sinr_linear(&self) -> f64 {
        10f64.powf(self.input_sinr_db / 10.0)
    }

    /// `(sigma_I^2 per interferer, sigma_w^2)` with total background power 1
    /// at channel 1.
    fn background_powers(&self) -> (f64, f64) {
        if self.interferers == 0 {
            (0.0, 1.0)
        } else {
            let rho = self.uncorrelated_noise_fraction;
            ((1.0 - rho) / self.interferers as f64, rho)
        }
    }
}

/// Either a single-channel spectrum or a single-channel waveform.
#[derive(Clone, Debug, PartialEq)]
pub enum SceneSignal {
    Spectral(SourceSpectrum),
    Time(Vec<f64>),
}

/// Either a multichannel spectrum or a multichannel waveform.
#[derive(Clone, Debug, PartialEq)]
pub enum SceneMixture {
    Spectral(SpectralTensor),
    Time(MultichannelWave),
}

impl SceneMixture {
    pub fn channels(&self) -> usize {
        match self {
            SceneMixture::Spectral(t) => t.channels(),
            SceneMixture::Time(w) => w.channels(),
        }
    }

    pub fn channel(&self, m: usize) -> SceneSignal {
        match self {
            SceneMixture::Spectral(t) => SceneSignal::Spectral(t.channel(m)),
            SceneMixture::Time(w) => SceneSignal::Time(w.channel(m)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthScene {
    pub spec: SceneSpec,
    pub mixture: SceneMixture,
    /// Target contribution at every channel.
    pub target_component: SceneMixture,
    /// Background contribution at every channel.
    pub background_component: SceneMixture,
    /// Per-bin `Sigma^(s)_f`; only for instantaneous scenes.
    pub target_covariance: Option<Vec<HermitianMatrix>>,
    /// Per-bin `Sigma^(b)_f`; only for instantaneous scenes.
    pub background_covariance: Option<Vec<HermitianMatrix>>,
}

impl GroundTruthScene {
    pub fn target_image(&self) -> SceneSignal {
        self.target_component.channel(0)
    }

    pub fn background_image(&self) -> SceneSignal {
        self.background_component.channel(0)
    }

    pub fn reference_channel(&self) -> SceneSignal {
        self.mixture.channel(0)
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Uniform draw from the unit sphere of `C^m`.
fn unit_vector<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..m).map(|_| complex_normal(rng)).collect();
        let norm = crate::linalg::norm(&v);
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Per-frame envelope with unit expected power.
fn envelope<R: Rng + ?Sized>(rng: &mut R, model: TargetModel, len: usize) -> Vec<f64> {
    match model {
        TargetModel::LaplaceModulated => (0..len)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                e * core::f64::consts::FRAC_1_SQRT_2
            })
            .collect(),
        TargetModel::GaussTimeVarying => {
            let a = LOG_ENVELOPE_RANGE;
            let mean_power = ((2.0 * a).exp() - (-2.0 * a).exp()) / (4.0 * a);
            let dist = Uniform::new(-a, a).expect("nonempty range");
            (0..len)
                .map(|_| dist.sample(rng).exp() / mean_power.sqrt())
                .collect()
        }
    }
}

pub fn generate_scene(spec: &SceneSpec) -> Result<GroundTruthScene, FiveError> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    match spec.mixing {
        Mixing::InstantaneousPerBin => Ok(generate_instantaneous(spec, &mut rng)),
        Mixing::ConvolutiveFir { taps } => generate_convolutive(spec, taps, &mut rng),
    }
}

fn generate_instantaneous(spec: &SceneSpec, rng: &mut ChaCha12Rng) -> GroundTruthScene {
    let (m, bins, frames, q) = (spec.channels, spec.bins, spec.frames, spec.interferers);
    let steering: Vec<Vec<Complex64>> = (0..bins).map(|_| unit_vector(rng, m)).collect();
    let interferer_steering: Vec<Vec<Vec<Complex64>>> = (0..q)
        .map(|_| (0..bins).map(|_| unit_vector(rng, m)).collect())
        .collect();
    let g = envelope(rng, spec.target_model, frames);

    let mean_ref_gain = |vs: &[Vec<Complex64>]| vs.iter().map(|a| a[0].norm_sqr()).sum::<f64>() / bins as f64;
    let target_scale = (spec.sinr_linear() / mean_ref_gain(&steering)).sqrt();
    let (interferer_power, noise_power) = spec.background_powers();
    let interferer_scales: Vec<f64> = interferer_steering
        .iter()
        .map(|c| (interferer_power / mean_ref_gain(c)).sqrt())
        .collect();
    let noise_scale = noise_power.sqrt();

    let mut target = SpectralTensor::zeros(bins, frames, m);
    let mut background = SpectralTensor::zeros(bins, frames, m);
    for f in 0..bins {
        for n in 0..frames {
            let s = complex_normal(rng) * (g[n] * target_scale);
            for (dst, a) in target.vector_mut(f, n).iter_mut().zip(&steering[f]) {
                *dst = a * s;
            }
        }
    }
    for (qi, c) in interferer_steering.iter().enumerate() {
        for f in 0..bins {
            for n in 0..frames {
                let u = complex_normal(rng) * interferer_scales[qi];
                for (dst, cm) in background.vector_mut(f, n).iter_mut().zip(&c[f]) {
                    *dst += cm * u;
                }
            }
        }
    }
    for f in 0..bins {
        for n in 0..frames {
            for dst in background.vector_mut(f, n) {
                *dst += complex_normal(rng) * noise_scale;
            }
        }
    }
    let mixture_data = target
        .as_slice()
        .iter()
        .zip(background.as_slice())
        .map(|(t, b)| t + b)
        .collect();
    let mixture = SpectralTensor::from_vec(bins, frames, m, mixture_data).expect("finite by construction");

    let target_covariance = steering
        .iter()
        .map(|a| {
            HermitianMatrix::from_outer_products(m, core::iter::once((target_scale * target_scale, a.as_slice())))
        })
        .collect();
    let background_covariance = (0..bins)
        .map(|f| {
            let mut cov = HermitianMatrix::from_outer_products(
                m,
                interferer_steering
                    .iter()
                    .zip(&interferer_scales)
                    .map(|(c, s)| (s * s, c[f].as_slice())),
            );
            cov.add_to_diagonal(noise_power);
            cov
        })
        .collect();

    GroundTruthScene {
        spec: spec.clone(),
        mixture: SceneMixture::Spectral(mixture),
        target_component: SceneMixture::Spectral(target),
        background_component: SceneMixture::Spectral(background),
        target_covariance: Some(target_covariance),
        background_covariance: Some(background_covariance),
    }
}

/// Unit-energy FIR filter with exponentially decaying Gaussian taps.
fn decaying_filter<R: Rng + ?Sized>(rng: &mut R, taps: usize) -> Vec<f64> {
    let rate = FIR_DECAY_DB / 20.0 * core::f64::consts::LN_10 / taps as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|k| {
            let x: f64 = rng.sample(StandardNormal);
            x * (-rate * k as f64).exp()
        })
        .collect();
    let energy: f64 = h.iter().map(|x| x * x).sum();
    let scale = if energy > 0.0 { 1.0 / energy.sqrt() } else { 0.0 };
    h.iter_mut().for_each(|x| *x *= scale);
    h
}

/// Causal convolution truncated to the input length, accumulated into `out`.
fn convolve_into(signal: &[f64], filter: &[f64], out: &mut [f64]) {
    for (t, y) in out.iter_mut().enumerate() {
        let kmax = filter.len().min(t + 1);
        let mut acc = 0.0;
        for (k, h) in filter[..kmax].iter().enumerate() {
            acc += h * signal[t - k];
        }
        *y += acc;
    }
}

fn generate_convolutive(
    spec: &SceneSpec,
    taps: usize,
    rng: &mut ChaCha12Rng,
) -> Result<GroundTruthScene, FiveError> {
    let (m, q) = (spec.channels, spec.interferers);
    let len = spec.num_samples();
    let block = spec.bins - 1;
    let target_filters: Vec<Vec<f64>> = (0..m).map(|_| decaying_filter(rng, taps)).collect();
    let interferer_filters: Vec<Vec<Vec<f64>>> = (0..q)
        .map(|_| (0..m).map(|_| decaying_filter(rng, taps)).collect())
        .collect();
    let g = envelope(rng, spec.target_model, len.div_ceil(block));

    // Filters have unit energy, so channel-1 power of a unit white source is 1.
    let target_scale = spec.sinr_linear().sqrt();
    let (interferer_power, noise_power) = spec.background_powers();
    let source: Vec<f64> = (0..len)
        .map(|t| {
            let v: f64 = rng.sample(StandardNormal);
            v * g[t / block] * target_scale
        })
        .collect();
    let mut target = vec![vec![0.0; len]; m];
    for (ch, h) in target.iter_mut().zip(&target_filters) {
        convolve_into(&source, h, ch);
    }
    let mut background = vec![vec![0.0; len]; m];
    for filters in &interferer_filters {
        let u: Vec<f64> = (0..len)
            .map(|_| {
                let v: f64 = rng.sample(StandardNormal);
                v * interferer_power.sqrt()
            })
            .collect();
        for (ch, h) in background.iter_mut().zip(filters) {
            convolve_into(&u, h, ch);
        }
    }
    for ch in background.iter_mut() {
        for y in ch.iter_mut() {
            let v: f64 = rng.sample(StandardNormal);
            *y += v * noise_power.sqrt();
        }
    }
    let mixture: Vec<Vec<f64>> = target
        .iter()
        .zip(&background)
        .map(|(t, b)| t.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    let wave = |chs: &[Vec<f64>]| {
        MultichannelWave::from_channels(spec.sample_rate, chs)
            .map_err(|_| FiveError::NonFinite)
    };
    Ok(GroundTruthScene {
        spec: spec.clone(),
        mixture: SceneMixture::Time(wave(&mixture)?),
        target_component: SceneMixture::Time(wave(&target)?),
        background_component: SceneMixture::Time(wave(&background)?),
        target_covariance: None,
        background_covariance: None,
    })
}

/// `SINR_f[w] = (w^H Sigma_s w) / (w^H Sigma_b w)`.
pub fn sinr(w: &[Complex64], target_cov: &HermitianMatrix, background_cov: &HermitianMatrix) -> f64 {
    target_cov.quadratic_form(w) / background_cov.quadratic_form(w)
}

/// Per-bin SINR of the given (unwhitened) filters under the scene's true
/// covariances.
pub fn sinr_per_bin(scene: &GroundTruthScene, filters: &[Vec<Complex64>]) -> Result<Vec<f64>, FiveError> {
    let (ts, bs) = match (&scene.target_covariance, &scene.background_covariance) {
        (Some(t), Some(b)) => (t, b),
        _ => return Err(FiveError::NoSpectralGroundTruth),
    };
    if filters.len() != ts.len() {
        return Err(FiveError::ShapeMismatch("one filter per bin is required"));
    }
    Ok(filters
        .iter()
        .zip(ts.iter().zip(bs))
        .map(|(w, (t, b))| sinr(w, t, b))
        .collect())
}

/// Top generalized eigenvector of `(Sigma_s + Sigma_b, Sigma_b)`.
pub fn max_sinr_filter(
    target_cov: &HermitianMatrix,
    background_cov: &HermitianMatrix,
) -> Result<Vec<Complex64>, crate::error::LinalgError> {
    let m = target_cov.dim();
    let qb = cholesky(background_cov)?;
    let mut total = target_cov.matrix().clone();
    for i in 0..m {
        for j in 0..m {
            total[(i, j)] += background_cov[(i, j)];
        }
    }
    // Qb^{-H} Sigma_x Qb^{-1}, applied one side at a time.
    let left = whiten_columns(&qb, &total)?;
    let both = whiten_columns(&qb, &left.adjoint())?;
    let eig = eig_hermitian(&HermitianMatrix::symmetrized(both))?;
    let w = qb.solve_upper_triangular(&eig.eigenvector(0))?;
    let norm = crate::linalg::norm(&w);
    Ok(w.into_iter().map(|x| x / norm).collect())
}

fn whiten_columns(
    q: &crate::linalg::CholeskyFactor,
    m: &CMatrix,
) -> Result<CMatrix, crate::error::LinalgError> {
    let columns: Result<Vec<Vec<Complex64>>, _> = (0..m.cols())
        .map(|j| q.apply_inverse_hermitian_transpose(&m.column(j)))
        .collect();
    Ok(CMatrix::from_columns(&columns?))
}

/// The max-SINR beamformer under the scene's true covariances: the reference
/// no blind method can beat.
pub fn oracle_max_sinr(scene: &GroundTruthScene) -> Result<Vec<Vec<Complex64>>, FiveError> {
    let (ts, bs) = match (&scene.target_covariance, &scene.background_covariance) {
        (Some(t), Some(b)) => (t, b),
        _ => return Err(FiveError::NoSpectralGroundTruth),
    };
    ts.iter()
        .zip(bs)
        .enumerate()
        .map(|(bin, (t, b))| max_sinr_filter(t, b).map_err(|source| FiveError::Linalg { bin, source }))
        .collect()
}
