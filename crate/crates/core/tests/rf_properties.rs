use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use qus_core::rf::{analytic_signal, envelope, log_compress, EnvelopeFrame, RfFrame};

/// Analytic signal from a direct O(n²) DFT with the one-sided spectrum weights.
fn dft_analytic(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let tau = 2.0 * std::f64::consts::PI / n as f64;
    let spectrum: Vec<Complex64> = (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -tau * (k * t % n) as f64))
                .sum()
        })
        .collect();
    let weight = |k: usize| {
        if k == 0 || 2 * k == n {
            1.0
        } else if 2 * k < n {
            2.0
        } else {
            0.0
        }
    };
    (0..n)
        .map(|t| {
            spectrum
                .iter()
                .enumerate()
                .map(|(k, &s)| s * weight(k) * Complex64::from_polar(1.0, tau * (k * t % n) as f64))
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

fn frame(samples: Array2<f64>) -> RfFrame<f64> {
    RfFrame::new(samples, 40e6, 9e6).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_dft_oracle(x in prop::collection::vec(-1000.0f64..1000.0, 2..=256)) {
        let fast = analytic_signal(&x).unwrap();
        let slow = dft_analytic(&x);
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn envelope_ignores_sign(data in prop::collection::vec(-5.0f64..5.0, 3 * 40)) {
        let x = Array2::from_shape_vec((3, 40), data).unwrap();
        let a = envelope(&frame(x.clone())).unwrap();
        let b = envelope(&frame(-x)).unwrap();
        prop_assert_eq!(a.amplitude(), b.amplitude());
    }

    #[test]
    fn envelope_scales_linearly(data in prop::collection::vec(-5.0f64..5.0, 2 * 33), c in 0.01f64..100.0) {
        let x = Array2::from_shape_vec((2, 33), data).unwrap();
        let a = envelope(&frame(x.clone())).unwrap();
        let b = envelope(&frame(x * c)).unwrap();
        for (&u, &v) in a.amplitude().iter().zip(b.amplitude()) {
            prop_assert!((v - c * u).abs() <= 1e-12 * (c * u).abs().max(1e-300) + 1e-12 * c);
        }
    }

    #[test]
    fn bmode_ignores_global_gain(data in prop::collection::vec(0.0f64..10.0, 4 * 16), k in 1u32..20) {
        let a = Array2::from_shape_vec((4, 16), data).unwrap();
        prop_assume!(a.iter().any(|&v| v > 0.0));
        // Power-of-two gains are exact in binary floating point.
        let c = 2f64.powi(k as i32 - 10);
        let p = log_compress(&EnvelopeFrame::new(a.clone()).unwrap(), 50.0).unwrap();
        let q = log_compress(&EnvelopeFrame::new(a * c).unwrap(), 50.0).unwrap();
        prop_assert_eq!(p.pixels(), q.pixels());
    }
}

#[test]
fn pure_tone_has_flat_interior_envelope() {
    let n = 512;
    let x = Array2::from_shape_fn((1, n), |(_, t)| 3.0 * (2.0 * std::f64::consts::PI * 9e6 * t as f64 / 40e6).cos());
    let env = envelope(&frame(x)).unwrap();
    for &a in env.amplitude().iter().skip(64).take(n - 128) {
        assert!((a - 3.0).abs() < 1e-6 * 3.0 + 0.02, "{a}");
    }
}

#[test]
fn impulse_envelope_peaks_at_the_impulse() {
    let pos = [10usize, 37, 80, 111];
    let mut x = Array2::zeros((4, 128));
    for (l, &p) in pos.iter().enumerate() {
        x[[l, p]] = 1.0;
    }
    let env = envelope(&frame(x)).unwrap();
    for (l, &p) in pos.iter().enumerate() {
        let row = env.amplitude().row(l);
        let argmax = (0..128).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        assert_eq!(argmax, p);
        let oracle = dft_analytic(&env_line_input(128, p));
        for (t, o) in oracle.iter().enumerate() {
            assert!((row[t] - o.norm()).abs() < 1e-9);
        }
    }
}

fn env_line_input(n: usize, p: usize) -> Vec<f64> {
    (0..n).map(|t| if t == p { 1.0 } else { 0.0 }).collect()
}

#[test]
fn log_compress_reference_levels_in_frames() {
    let a = Array2::from_shape_vec((1, 3), vec![1.0, 10f64.powf(-25.0 / 20.0), 10f64.powf(-50.0 / 20.0)]).unwrap();
    let img = log_compress(&EnvelopeFrame::new(a).unwrap(), 50.0).unwrap();
    assert_eq!(img.pixels().as_slice().unwrap(), &[255, 128, 0]);
}
