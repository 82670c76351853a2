use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::linalg::{eig_hermitian, smallest_eigenpair};
use crate::scene::{generate_scene, SceneMixture, SceneSpec};

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

fn random_tensor(rng: &mut ChaCha8Rng, bins: usize, frames: usize, channels: usize) -> SpectralTensor {
    let data = (0..bins * frames * channels).map(|_| cn(rng)).collect();
    SpectralTensor::from_vec(bins, frames, channels, data).unwrap()
}

/// Full-rank instantaneous scene: one Laplace-modulated target in white
/// Gaussian noise.
fn two_source_mixture(seed: u64, bins: usize, frames: usize) -> SpectralTensor {
    let spec = SceneSpec {
        channels: 2,
        bins,
        frames,
        seed,
        interferers: 0,
        uncorrelated_noise_fraction: 1.0,
        ..SceneSpec::default()
    };
    match generate_scene(&spec).unwrap().mixture {
        SceneMixture::Spectral(t) => t,
        SceneMixture::Time(_) => unreachable!(),
    }
}

fn fro_dist_to_identity(m: &HermitianMatrix) -> f64 {
    m.matrix().sub(&CMatrix::identity(m.dim())).frobenius_norm()
}

#[test]
fn prewhiten_leaves_white_data_untouched() {
    // Frames 2e1, 2e2, 0, 0: C = (4 e1 e1^H + 4 e2 e2^H) / 4 = I exactly.
    let two = Complex64::new(2.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let data = vec![two, zero, zero, two, zero, zero, zero, zero];
    let x = SpectralTensor::from_vec(1, 4, 2, data).unwrap();
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    assert_eq!(q[0].q(), &CMatrix::identity(2));
    assert_eq!(w, x);
}

#[test]
fn prewhiten_single_channel_is_rms_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_tensor(&mut rng, 5, 40, 1);
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    for f in 0..5 {
        let power: f64 = (0..40).map(|n| x.get(f, n, 0).norm_sqr()).sum::<f64>() / 40.0;
        assert!((q[f].q()[(0, 0)].re - power.sqrt()).abs() < 1e-12);
        let white: f64 = (0..40).map(|n| w.get(f, n, 0).norm_sqr()).sum::<f64>() / 40.0;
        assert!((white - 1.0).abs() < 1e-12);
    }
}

#[test]
fn prewhitened_covariance_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut x = random_tensor(&mut rng, 8, 256, 3);
    // Correlate the channels so the whitening has something to undo.
    for f in 0..8 {
        for n in 0..256 {
            let v = x.vector_mut(f, n);
            v[1] += v[0] * 3.0;
            v[2] = v[2] * 0.01 + v[1];
        }
    }
    let (w, _) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    for f in 0..8 {
        assert!(fro_dist_to_identity(&sample_covariance(&w, f)) < 1e-8);
    }
}

#[test]
fn prewhiten_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let short = random_tensor(&mut rng, 2, 2, 3);
    assert_eq!(
        prewhiten(&short, DEFAULT_REGULARIZATION),
        Err(FiveError::TooFewFrames { frames: 2, channels: 3 })
    );
    let silent = SpectralTensor::zeros(2, 10, 2);
    assert_eq!(
        prewhiten(&silent, DEFAULT_REGULARIZATION),
        Err(FiveError::RankDeficient { bin: 0 })
    );
}

#[test]
fn prewhiten_loads_rank_deficient_bins_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut x = random_tensor(&mut rng, 1, 50, 2);
    for n in 0..50 {
        let v = x.vector_mut(0, n);
        v[1] = v[0];
    }
    assert!(prewhiten(&x, 1e-6).is_ok());
    assert_eq!(prewhiten(&x, 0.0), Err(FiveError::RankDeficient { bin: 0 }));
}

#[test]
fn unit_weight_gives_sample_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_tensor(&mut rng, 3, 30, 3);
    let activity: Vec<f64> = (0..30).map(|n| n as f64 + 0.5).collect();
    for f in 0..3 {
        let v = weighted_covariance(&x, &activity, &|_r: f64| 1.0, DEFAULT_ACTIVITY_FLOOR, f);
        assert_eq!(v, sample_covariance(&x, f));
    }
}

#[test]
fn laplace_weight_single_frame() {
    let x = SpectralTensor::from_vec(1, 1, 2, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    let v = weighted_covariance(&x, &[2.0], &ContrastModel::laplace(), DEFAULT_ACTIVITY_FLOOR, 0);
    assert_eq!(v[(0, 0)], Complex64::new(0.25, 0.0));
    assert_eq!(v[(0, 1)], Complex64::new(0.0, 0.0));
    assert_eq!(v[(1, 1)], Complex64::new(0.0, 0.0));
}

#[test]
fn weighted_covariance_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (bins, frames, m) = (4, 25, 3);
    let x = random_tensor(&mut rng, bins, frames, m);
    let activity: Vec<f64> = (0..frames).map(|_| rng.random_range(0.1..3.0)).collect();
    let contrast = ContrastModel::gauss(bins);
    for f in 0..bins {
        let v = weighted_covariance(&x, &activity, &contrast, DEFAULT_ACTIVITY_FLOOR, f);
        for i in 0..m {
            for j in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..frames {
                    let phi = bins as f64 / (activity[n] * activity[n]);
                    acc += x.get(f, n, i) * x.get(f, n, j).conj() * phi;
                }
                acc /= frames as f64;
                assert!((v[(i, j)] - acc).norm() <= 1e-12 * acc.norm().max(1.0));
            }
        }
    }
}

#[test]
fn activity_floor_applies_before_weighting() {
    let x = SpectralTensor::from_vec(1, 1, 1, vec![Complex64::new(1.0, 0.0)]).unwrap();
    let v = weighted_covariance(&x, &[0.0], &ContrastModel::laplace(), 0.5, 0);
    assert_eq!(v[(0, 0)].re, 1.0);
}

#[test]
fn activity_cases() {
    let s = SourceSpectrum::from_vec(1, 2, vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, 0.0)]).unwrap();
    assert_eq!(update_activity(&s), vec![5.0, 0.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<Complex64> = (0..64).map(|_| cn(&mut rng)).collect();
    let s = SourceSpectrum::from_vec(16, 4, data).unwrap();
    let r = update_activity(&s);
    for n in 0..4 {
        let mut acc = 0.0;
        for f in 0..16 {
            let v = s.get(f, n);
            acc += v.re * v.re + v.im * v.im;
        }
        assert!((r[n] - acc.sqrt()).abs() < 1e-12);
    }
}

fn config(kind: ContrastKind) -> FiveConfig {
    FiveConfig {
        contrast: kind,
        ..FiveConfig::default()
    }
}

#[test]
fn single_channel_iteration_is_rescaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_tensor(&mut rng, 6, 20, 1);
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    let state = DemixingState::initial(&w, q, 0).unwrap();
    let contrast = ContrastModel::gauss(6);
    let cfg = config(ContrastKind::Gauss);
    let next = five_iteration(&state, &w, &contrast, &cfg).unwrap();
    for f in 0..6 {
        let v = weighted_covariance(&w, &state.activity, &contrast, cfg.activity_floor, f);
        let lambda = v[(0, 0)].re;
        let expected = 1.0 / lambda.sqrt();
        assert!((next.filters[f][0].re - expected).abs() < 1e-12 * expected);
        assert_eq!(next.filters[f][0].im, 0.0);
        for n in 0..20 {
            assert!((next.extracted.get(f, n) - w.get(f, n, 0) * expected).norm() < 1e-12);
        }
    }
}

#[test]
fn update_satisfies_scaling_row() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = random_tensor(&mut rng, 5, 60, 4);
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    for kind in [ContrastKind::Laplace, ContrastKind::Gauss] {
        let contrast = ContrastModel::new(kind, 5);
        let cfg = config(kind);
        let mut state = DemixingState::initial(&w, q.clone(), 0).unwrap();
        for _ in 0..3 {
            let next = five_iteration(&state, &w, &contrast, &cfg).unwrap();
            for f in 0..5 {
                let v = weighted_covariance(&w, &state.activity, &contrast, cfg.activity_floor, f);
                assert!((v.quadratic_form(&next.filters[f]) - 1.0).abs() < 1e-10);
            }
            state = next;
        }
    }
}

#[test]
fn two_source_mixture_reaches_fixed_point() {
    let x = two_source_mixture(21, 32, 2000);
    let cfg = FiveConfig {
        max_iterations: 10,
        ..FiveConfig::default()
    };
    let mut ex = Extractor::new(&x, cfg).unwrap();
    for _ in 0..10 {
        ex.step().unwrap();
    }
    let state = ex.state();
    for f in 0..32 {
        let v = weighted_covariance(ex.whitened(), &state.activity, ex.contrast(), DEFAULT_ACTIVITY_FLOOR, f);
        let row_one = (v.quadratic_form(&state.filters[f]) - 1.0).abs();
        assert!(row_one <= 1e-8, "bin {f}: {row_one:e}");
    }
}

#[test]
fn scalar_nll() {
    let x = SpectralTensor::from_vec(1, 1, 1, vec![Complex64::new(1.0, 0.0)]).unwrap();
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    let state = DemixingState::initial(&w, q, 0).unwrap();
    let nll = evaluate_nll(&state, &w, &ContrastModel::laplace(), DEFAULT_ACTIVITY_FLOOR);
    assert_eq!(nll, 1.0);
}

#[test]
fn nll_doubles_with_duplicated_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = random_tensor(&mut rng, 4, 30, 3);
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    let contrast = ContrastModel::gauss(4);
    let cfg = config(ContrastKind::Gauss);
    let state = five_iteration(&DemixingState::initial(&w, q.clone(), 0).unwrap(), &w, &contrast, &cfg).unwrap();

    let mut dup = SpectralTensor::zeros(4, 60, 3);
    let mut dup_s = SourceSpectrum::zeros(4, 60);
    for f in 0..4 {
        for n in 0..60 {
            dup.vector_mut(f, n).copy_from_slice(w.vector(f, n % 30));
            dup_s.set(f, n, state.extracted.get(f, n % 30));
        }
    }
    let mut dup_state = state.clone();
    dup_state.activity = update_activity(&dup_s);
    dup_state.extracted = dup_s;
    let single = evaluate_nll(&state, &w, &contrast, DEFAULT_ACTIVITY_FLOOR);
    let double = evaluate_nll(&dup_state, &dup, &contrast, DEFAULT_ACTIVITY_FLOOR);
    assert!((double - 2.0 * single).abs() <= 1e-10 * single.abs());
}

#[test]
fn nll_is_monotone_for_both_contrasts() {
    for seed in 0..4 {
        let x = two_source_mixture(seed, 32, 500);
        for kind in [ContrastKind::Laplace, ContrastKind::Gauss] {
            let mut ex = Extractor::new(&x, config(kind)).unwrap();
            let mut prev = ex.nll();
            for _ in 0..40 {
                ex.step().unwrap();
                let cur = ex.nll();
                assert!(cur <= prev + 1e-9 * prev.abs(), "{kind:?} seed {seed}: {prev} -> {cur}");
                prev = cur;
            }
        }
    }
}

/// The M candidate solutions `w_k = lambda_k^{-1/2} r_k`, `J_k` = other
/// eigenvectors, of the stationarity system for `C = I`, `B = I`.
fn candidates(v: &HermitianMatrix) -> Vec<(Vec<Complex64>, CMatrix, f64)> {
    let eig = eig_hermitian(v).unwrap();
    let m = v.dim();
    (0..m)
        .map(|k| {
            let w: Vec<Complex64> = eig.eigenvector(k).iter().map(|x| x / eig.eigenvalues[k].sqrt()).collect();
            let others: Vec<Vec<Complex64>> = (0..m).filter(|&l| l != k).map(|l| eig.eigenvector(l)).collect();
            (w, CMatrix::from_columns(&others), eig.eigenvalues[k])
        })
        .collect()
}

fn random_weighted(rng: &mut ChaCha8Rng, m: usize) -> HermitianMatrix {
    let vectors: Vec<Vec<Complex64>> = (0..3 * m).map(|_| (0..m).map(|_| cn(rng)).collect()).collect();
    HermitianMatrix::from_outer_products(m, vectors.iter().map(|v| (rng.random_range(0.1..2.0), v.as_slice())))
}

#[test]
fn closed_form_candidates_solve_stationarity_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for m in 2..=4 {
        let v = random_weighted(&mut rng, m);
        for (w, j, _) in candidates(&v) {
            let r = head_residual_bin(&w, &j, &v, &HermitianMatrix::identity(m));
            assert!(r <= 1e-10, "residual {r:e}");
        }
    }
}

#[test]
fn perturbed_solution_has_visible_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let v = random_weighted(&mut rng, 3);
    let (mut w, j, _) = candidates(&v).pop().unwrap();
    let dir: Vec<Complex64> = (0..3).map(|_| cn(&mut rng)).collect();
    let scale = 1e-3 / crate::linalg::norm(&dir);
    for (wi, d) in w.iter_mut().zip(&dir) {
        *wi += d * scale;
    }
    assert!(head_residual_bin(&w, &j, &v, &HermitianMatrix::identity(3)) >= 1e-4);
}

#[test]
fn majorizer_is_minimized_by_smallest_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for m in 2..=4 {
        let v = random_weighted(&mut rng, m);
        let n = 1.0;
        let values: Vec<f64> = candidates(&v)
            .into_iter()
            .map(|(w, j, _)| {
                let demix = CMatrix::from_fn(m, m, |r, c| if c == 0 { w[r] } else { j[(r, c - 1)] });
                let log_det = log_abs_det(&demix).unwrap();
                let trace_term: f64 = (0..m - 1).map(|k| crate::linalg::norm_sqr(&j.column(k))).sum();
                -2.0 * n * log_det + n * v.quadratic_form(&w) + n * trace_term
            })
            .collect();
        let best = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(best, m - 1, "{values:?}");
    }
}

#[test]
fn unitary_rotation_of_one_bin_is_equivariant() {
    let x = two_source_mixture(4, 6, 200);
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    let contrast = ContrastModel::gauss(6);
    let cfg = config(ContrastKind::Gauss);
    let state = five_iteration(&DemixingState::initial(&w, q.clone(), 0).unwrap(), &w, &contrast, &cfg).unwrap();

    // 2x2 unitary: rotation with phases.
    let (c, s) = (0.6f64, 0.8f64);
    let u = CMatrix::from_vec(
        2,
        2,
        vec![
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
    )
    .unwrap();
    let mut rotated = w.clone();
    let bin = 3;
    for n in 0..200 {
        let y = u.mul_vec(w.vector(bin, n));
        rotated.vector_mut(bin, n).copy_from_slice(&y);
    }
    let a = five_iteration(&state, &w, &contrast, &cfg).unwrap();
    let b = five_iteration(&state, &rotated, &contrast, &cfg).unwrap();
    let uw = u.mul_vec(&a.filters[bin]);
    let phase = dot_h(&uw, &b.filters[bin]);
    let phase = phase / phase.norm();
    for (p, q) in uw.iter().zip(&b.filters[bin]) {
        assert!((p * phase - q).norm() < 1e-10);
    }
    for n in 0..200 {
        assert!((a.extracted.get(bin, n) * phase.conj() - b.extracted.get(bin, n)).norm() < 1e-10);
    }
    for (ra, rb) in a.activity.iter().zip(&b.activity) {
        assert!((ra - rb).abs() < 1e-10 * ra.max(1.0));
    }
}

#[test]
fn gauss_iterates_are_invariant_to_input_scale() {
    let x = two_source_mixture(5, 8, 150);
    let scaled = x.scaled(37.5);
    let cfg = config(ContrastKind::Gauss);
    let mut a = Extractor::new(&x, cfg.clone()).unwrap();
    let mut b = Extractor::new(&scaled, cfg).unwrap();
    for _ in 0..4 {
        a.step().unwrap();
        b.step().unwrap();
        let na = crate::linalg::norm(a.state().extracted.as_slice());
        let nb = crate::linalg::norm(b.state().extracted.as_slice());
        for (p, q) in a.state().extracted.as_slice().iter().zip(b.state().extracted.as_slice()) {
            assert!((p / na - q / nb).norm() < 1e-10);
        }
    }
}

#[test]
fn project_back_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let x = random_tensor(&mut rng, 3, 40, 2);
    let ch1 = x.channel(0);
    let same = project_back(&ch1, &x, 0, DEFAULT_ACTIVITY_FLOOR).unwrap();
    for (a, b) in same.as_slice().iter().zip(ch1.as_slice()) {
        assert!((a - b).norm() < 1e-14);
    }
    let doubled = SourceSpectrum::from_vec(3, 40, ch1.as_slice().iter().map(|v| v * 2.0).collect()).unwrap();
    let back = project_back(&doubled, &x, 0, DEFAULT_ACTIVITY_FLOOR).unwrap();
    for (a, b) in back.as_slice().iter().zip(ch1.as_slice()) {
        assert!((a - b).norm() < 1e-14);
    }
    let silent = SourceSpectrum::zeros(3, 40);
    assert_eq!(project_back(&silent, &x, 0, DEFAULT_ACTIVITY_FLOOR).unwrap(), silent);
    assert!(project_back(&SourceSpectrum::zeros(2, 40), &x, 0, DEFAULT_ACTIVITY_FLOOR).is_err());
}

#[test]
fn project_back_is_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = random_tensor(&mut rng, 1, 50, 2);
    let s_data: Vec<Complex64> = (0..50).map(|_| cn(&mut rng)).collect();
    let s = SourceSpectrum::from_vec(1, 50, s_data.clone()).unwrap();
    let out = project_back(&s, &x, 0, DEFAULT_ACTIVITY_FLOOR).unwrap();
    let a_fit = out.get(0, 0) / s.get(0, 0);
    let cost = |a: Complex64| -> f64 { (0..50).map(|n| (x.get(0, n, 0) - a * s_data[n]).norm_sqr()).sum() };

    // Grid over the complex plane, then successive refinement.
    let (mut center, mut step) = (Complex64::new(0.0, 0.0), 8.0);
    for _ in 0..40 {
        let mut best = (cost(center), center);
        for i in -10..=10 {
            for k in -10..=10 {
                let cand = center + Complex64::new(i as f64 * step / 10.0, k as f64 * step / 10.0);
                let c = cost(cand);
                if c < best.0 {
                    best = (c, cand);
                }
            }
        }
        center = best.1;
        step /= 4.0;
    }
    assert!((center - a_fit).norm() < 1e-6, "{center} vs {a_fit}");
    assert!(cost(a_fit) <= cost(center) + 1e-12);
}

#[test]
fn extractor_report_is_monotone_when_monitoring() {
    let x = two_source_mixture(30, 16, 400);
    let cfg = FiveConfig {
        max_iterations: 8,
        nll_monitoring: true,
        ..FiveConfig::default()
    };
    let mut ex = Extractor::new(&x, cfg).unwrap();
    let mut t = 0.0;
    let report = ex
        .run_with_clock(&mut || {
            t += 1.0;
            t
        })
        .unwrap();
    assert_eq!(report.records.len(), 9);
    assert_eq!(report.iterations, 8);
    let nll = report.nll_sequence();
    for pair in nll.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs());
    }
    assert!(report.records.iter().skip(1).all(|r| r.wall_time_ms == 1.0));
}

#[test]
fn early_stop_and_convergence_certificate() {
    let x = two_source_mixture(31, 8, 400);
    let cfg = FiveConfig {
        max_iterations: 2000,
        early_stop: Some(1e-10),
        ..FiveConfig::default()
    };
    let mut ex = Extractor::new(&x, cfg).unwrap();
    let report = ex.run_with_clock(&mut || 0.0).unwrap();
    assert!(report.converged, "{} iterations", report.iterations);
    assert!(report.iterations < 2000);
    assert!(ex.head_residual() <= 1e-6);
}

#[test]
fn config_validation() {
    let bad = [
        FiveConfig { max_iterations: 0, ..FiveConfig::default() },
        FiveConfig { regularization: -1.0, ..FiveConfig::default() },
        FiveConfig { activity_floor: 0.0, ..FiveConfig::default() },
        FiveConfig { early_stop: Some(0.0), ..FiveConfig::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err());
    }
    let x = two_source_mixture(1, 2, 10);
    let cfg = FiveConfig { reference_channel: 2, ..FiveConfig::default() };
    assert!(Extractor::new(&x, cfg).is_err());
}

#[test]
fn smallest_eigenpair_drives_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let x = random_tensor(&mut rng, 1, 40, 3);
    let (w, q) = prewhiten(&x, DEFAULT_REGULARIZATION).unwrap();
    let contrast = ContrastModel::laplace();
    let cfg = config(ContrastKind::Laplace);
    let state = DemixingState::initial(&w, q, 0).unwrap();
    let next = five_iteration(&state, &w, &contrast, &cfg).unwrap();
    let v = weighted_covariance(&w, &state.activity, &contrast, cfg.activity_floor, 0);
    let (lambda, r) = smallest_eigenpair(&v).unwrap();
    for (a, b) in next.filters[0].iter().zip(&r) {
        assert!((a - b / lambda.sqrt()).norm() < 1e-12);
    }
}

