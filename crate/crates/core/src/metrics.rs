//! Scale-invariant SDR and SIR against known source images.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::FiveError;
use crate::linalg::{dot_h, norm_sqr};
use crate::scene::{GroundTruthScene, SceneSignal};

/// Reports are clamped to `+-SENTINEL_DB`; exact matches hit the cap.
pub const SENTINEL_DB: f64 = 300.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub si_sdr_db: f64,
    pub si_sir_db: f64,
    pub delta_si_sdr_db: f64,
    pub delta_si_sir_db: f64,
    /// Scores of the unprocessed reference channel.
    pub input_si_sdr_db: f64,
    pub input_si_sir_db: f64,
}

fn ratio_db(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        return SENTINEL_DB;
    }
    if signal == 0.0 {
        return -SENTINEL_DB;
    }
    (10.0 * (signal / noise).log10()).clamp(-SENTINEL_DB, SENTINEL_DB)
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `10 log10(||a s||^2 / ||e - a s||^2)` with `a = <s, e> / ||s||^2`.
pub fn si_sdr_complex(estimate: &[Complex64], reference: &[Complex64]) -> Result<f64, FiveError> {
    if estimate.len() != reference.len() {
        return Err(FiveError::ShapeMismatch("estimate and reference lengths differ"));
    }
    let ref_energy = norm_sqr(reference);
    if ref_energy == 0.0 {
        return Err(FiveError::ZeroReference);
    }
    let alpha = dot_h(reference, estimate) / ref_energy;
    let mut target = 0.0;
    let mut distortion = 0.0;
    for (e, s) in estimate.iter().zip(reference) {
        let t = s * alpha;
        target += t.norm_sqr();
        distortion += (e - t).norm_sqr();
    }
    Ok(ratio_db(target, distortion))
}

pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64, FiveError> {
    si_sdr_complex(&to_complex(estimate), &to_complex(reference))
}

/// Least-squares split of `estimate` onto `alpha t + beta b`, scored as
/// `10 log10(||alpha t||^2 / ||beta b||^2)`.
pub fn si_sir_complex(
    estimate: &[Complex64],
    target: &[Complex64],
    background: &[Complex64],
) -> Result<f64, FiveError> {
    if estimate.len() != target.len() || estimate.len() != background.len() {
        return Err(FiveError::ShapeMismatch("estimate and image lengths differ"));
    }
    let tt = norm_sqr(target);
    let bb = norm_sqr(background);
    if tt == 0.0 || bb == 0.0 {
        return Err(FiveError::ZeroReference);
    }
    let tb = dot_h(target, background);
    let te = dot_h(target, estimate);
    let be = dot_h(background, estimate);
    let det = tt * bb - tb.norm_sqr();
    if det <= 1e-14 * tt * bb {
        return Err(FiveError::ShapeMismatch("target and background images are collinear"));
    }
    let alpha = (te * bb - tb * be) / det;
    let beta = (be * tt - tb.conj() * te) / det;
    Ok(ratio_db(alpha.norm_sqr() * tt, beta.norm_sqr() * bb))
}

pub fn si_sir(estimate: &[f64], target: &[f64], background: &[f64]) -> Result<f64, FiveError> {
    si_sir_complex(&to_complex(estimate), &to_complex(target), &to_complex(background))
}

fn flatten(signal: &SceneSignal) -> Vec<Complex64> {
    match signal {
        SceneSignal::Spectral(s) => s.as_slice().to_vec(),
        SceneSignal::Time(x) => to_complex(x),
    }
}

fn same_kind(a: &SceneSignal, b: &SceneSignal) -> bool {
    matches!(
        (a, b),
        (SceneSignal::Spectral(_), SceneSignal::Spectral(_)) | (SceneSignal::Time(_), SceneSignal::Time(_))
    )
}

/// Scores `extracted` and the unprocessed reference channel against the
/// scene's channel-1 images.
pub fn evaluate_extraction(
    scene: &GroundTruthScene,
    extracted: &SceneSignal,
) -> Result<MetricReport, FiveError> {
    let target = scene.target_image();
    if !same_kind(&target, extracted) {
        return Err(FiveError::ShapeMismatch("extracted signal domain differs from the scene"));
    }
    let t = flatten(&target);
    let b = flatten(&scene.background_image());
    let x = flatten(&scene.reference_channel());
    let e = flatten(extracted);
    score_complex(&e, &t, &b, &x)
}

/// SI-SDR / SI-SIR of `estimate` and of the unprocessed `reference` against
/// the target and background images, plus the improvement of the former over
/// the latter.
pub fn score_complex(
    estimate: &[Complex64],
    target: &[Complex64],
    background: &[Complex64],
    reference: &[Complex64],
) -> Result<MetricReport, FiveError> {
    let si_sdr_db = si_sdr_complex(estimate, target)?;
    let si_sir_db = si_sir_complex(estimate, target, background)?;
    let input_si_sdr_db = si_sdr_complex(reference, target)?;
    let input_si_sir_db = si_sir_complex(reference, target, background)?;
    Ok(MetricReport {
        si_sdr_db,
        si_sir_db,
        delta_si_sdr_db: si_sdr_db - input_si_sdr_db,
        delta_si_sir_db: si_sir_db - input_si_sir_db,
        input_si_sdr_db,
        input_si_sir_db,
    })
}

pub fn score(estimate: &[f64], target: &[f64], background: &[f64], reference: &[f64]) -> Result<MetricReport, FiveError> {
    score_complex(
        &to_complex(estimate),
        &to_complex(target),
        &to_complex(background),
        &to_complex(reference),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_match_hits_sentinel() {
        let s = vec![1.0, -2.0, 3.0, 0.5];
        assert_eq!(si_sdr(&s, &s).unwrap(), SENTINEL_DB);
        let half: Vec<f64> = s.iter().map(|x| 0.5 * x).collect();
        assert_eq!(si_sdr(&half, &s).unwrap(), SENTINEL_DB);
    }

    #[test]
    fn zero_reference_is_error() {
        assert_eq!(si_sdr(&[1.0, 2.0], &[0.0, 0.0]), Err(FiveError::ZeroReference));
        assert!(si_sdr(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn orthogonal_noise_at_one_percent_is_twenty_db() {
        let s = [1.0, 1.0, 1.0, 1.0];
        // ||n||^2 = 0.04 = ||s||^2 / 100, <n, s> = 0
        let n = [0.1, -0.1, 0.1, -0.1];
        let e: Vec<f64> = s.iter().zip(&n).map(|(a, b)| a + b).collect();
        assert!((si_sdr(&e, &s).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn sir_cases() {
        let t = [1.0, 0.0, 1.0, 0.0];
        let b = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(si_sir(&t, &t, &b).unwrap(), SENTINEL_DB);
        assert_eq!(si_sir(&b, &t, &b).unwrap(), -SENTINEL_DB);
        let sum: Vec<f64> = t.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert!(si_sir(&sum, &t, &b).unwrap().abs() < 1e-9);
        assert_eq!(si_sir(&t, &[0.0; 4], &b), Err(FiveError::ZeroReference));
        assert!(si_sir(&t, &t, &t).is_err());
    }
}
