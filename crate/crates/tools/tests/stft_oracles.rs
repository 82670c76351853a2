use std::f64::consts::PI;

use five_core::wave::MultichannelWave;
use five_tools::stft::hamming;
use five_tools::{analyze, synthesize, StftConfig, StftError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(channels: usize, len: usize, seed: u64) -> MultichannelWave {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chans: Vec<Vec<f64>> = (0..channels)
        .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    MultichannelWave::from_channels(16_000, &chans).unwrap()
}

/// Relative L2 error over the samples at least `margin` away from either end.
fn interior_error(a: &MultichannelWave, b: &MultichannelWave, margin: usize) -> f64 {
    let (mut diff, mut energy) = (0.0, 0.0);
    for c in 0..a.channels() {
        let (x, y) = (a.channel(c), b.channel(c));
        for n in margin..x.len() - margin {
            diff += (x[n] - y[n]).powi(2);
            energy += x[n].powi(2);
        }
    }
    (diff / energy).sqrt()
}

#[test]
fn window_overlap_adds_to_a_constant() {
    for (size, hop) in [(1024, 512), (1024, 256), (4096, 2048), (512, 128), (1000, 500)] {
        let w = hamming(size);
        let shifted = |k: usize, p: u32| -> f64 { (0..size / hop).map(|j| w[k + j * hop].powi(p as i32)).sum() };
        let mean = (0..hop).map(|k| shifted(k, 1)).sum::<f64>() / hop as f64;
        for k in 0..hop {
            assert!((shifted(k, 1) - mean).abs() / mean < 1e-10, "{size}/{hop} at {k}");
            // The synthesis normalizer never gets close to zero.
            assert!(shifted(k, 2) > 0.5, "{size}/{hop} at {k}");
        }
    }
}

#[test]
fn round_trip_on_noise_and_tone() {
    let cfg = StftConfig::new(1024).unwrap();
    let n = noise(4, 20_000, 7);
    let back = synthesize(&analyze(&n, &cfg).unwrap()).unwrap();
    assert_eq!((back.len(), back.channels()), (n.len(), 4));
    assert!(interior_error(&n, &back, 1024) <= 1e-6);

    let tone: Vec<Vec<f64>> = (0..4)
        .map(|c| (0..16_000).map(|t| (2.0 * PI * 440.0 * t as f64 / 16_000.0 + c as f64).sin()).collect())
        .collect();
    let tone = MultichannelWave::from_channels(16_000, &tone).unwrap();
    let back = synthesize(&analyze(&tone, &StftConfig::with_hop(512, 128).unwrap()).unwrap()).unwrap();
    assert!(interior_error(&tone, &back, 512) <= 1e-6);
}

#[test]
fn parseval_holds_per_frame() {
    let cfg = StftConfig::new(256).unwrap();
    let x = noise(1, 256 * 6, 3);
    let spec = analyze(&x, &cfg).unwrap();
    let w = hamming(256);
    let signal = x.channel(0);
    for frame in 0..spec.tensor.frames() {
        let start = frame * cfg.hop;
        let time: f64 = (0..256)
            .map(|k| (signal.get(start + k).copied().unwrap_or(0.0) * w[k]).powi(2))
            .sum();
        let bins = spec.tensor.bins();
        let freq: f64 = (0..bins)
            .map(|f| {
                let p = spec.tensor.get(f, frame, 0).norm_sqr();
                if f == 0 || f == bins - 1 {
                    p
                } else {
                    2.0 * p
                }
            })
            .sum::<f64>()
            / 256.0;
        assert!((time - freq).abs() <= 1e-8 * time.max(1.0), "frame {frame}: {time} vs {freq}");
    }
}

#[test]
fn cosine_concentrates_in_its_bin() {
    let size = 1024;
    let k0 = 100;
    let x: Vec<f64> = (0..8 * size)
        .map(|t| (2.0 * PI * k0 as f64 * t as f64 / size as f64).cos())
        .collect();
    let wave = MultichannelWave::from_channels(16_000, &[x]).unwrap();
    let spec = analyze(&wave, &StftConfig::new(size).unwrap()).unwrap();
    let frame = 4;
    let peak = spec.tensor.get(k0, frame, 0).norm();
    for f in 0..spec.tensor.bins() {
        if f.abs_diff(k0) >= 2 {
            let db = 20.0 * (peak / spec.tensor.get(f, frame, 0).norm().max(1e-300)).log10();
            assert!(db >= 30.0, "bin {f}: {db} dB");
        }
    }
}

#[test]
fn channels_are_transformed_independently() {
    let cfg = StftConfig::new(512).unwrap();
    let both = noise(2, 5000, 11);
    let single = MultichannelWave::from_channels(16_000, &[both.channel(1)]).unwrap();
    let a = analyze(&both, &cfg).unwrap();
    let b = analyze(&single, &cfg).unwrap();
    for f in 0..a.tensor.bins() {
        for n in 0..a.tensor.frames() {
            assert_eq!(a.tensor.get(f, n, 1), b.tensor.get(f, n, 0));
        }
    }
}

#[test]
fn edge_bins_of_real_input_are_real() {
    let spec = analyze(&noise(3, 4000, 5), &StftConfig::new(512).unwrap()).unwrap();
    let last = spec.tensor.bins() - 1;
    for c in 0..3 {
        for n in 0..spec.tensor.frames() {
            assert_eq!(spec.tensor.get(0, n, c).im, 0.0);
            assert!(spec.tensor.get(last, n, c).im.abs() < 1e-12);
        }
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(matches!(StftConfig::new(1001), Err(StftError::FrameSize(_))));
    assert!(matches!(StftConfig::with_hop(1024, 1024), Err(StftError::Hop { .. })));
    assert!(matches!(StftConfig::with_hop(1024, 300), Err(StftError::Hop { .. })));
    let short = noise(1, 100, 1);
    assert!(matches!(
        analyze(&short, &StftConfig::new(1024).unwrap()),
        Err(StftError::TooShort { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_trip_any_length(len in 2048usize..6000, seed in 0u64..1000, quarter in proptest::bool::ANY) {
        let cfg = if quarter { StftConfig::with_hop(512, 128) } else { StftConfig::new(512) }.unwrap();
        let x = noise(2, len, seed);
        let back = synthesize(&analyze(&x, &cfg).unwrap()).unwrap();
        prop_assert_eq!(back.len(), len);
        prop_assert!(interior_error(&x, &back, 512) <= 1e-6);
    }
}
