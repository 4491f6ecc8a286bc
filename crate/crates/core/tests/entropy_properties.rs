use ndarray::{s, Array2};
use proptest::prelude::*;
use qus_core::entropy::{entropy_map, estimate_entropy, WindowSpec};
use qus_core::phantom::{simulate, Ellipse, PhantomSpec};
use qus_core::rf::{envelope, EnvelopeFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spread_samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..50.0, 20..400).prop_filter("needs spread", |v| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo > 1.0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shift_invariance(v in spread_samples(), c in -100.0f64..100.0, bins in 2usize..80) {
        let a = estimate_entropy(&v, bins).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        prop_assert!((estimate_entropy(&shifted, bins).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn scale_covariance(v in spread_samples(), c in 0.01f64..100.0, bins in 2usize..80) {
        let a = estimate_entropy(&v, bins).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((estimate_entropy(&scaled, bins).unwrap() - a - c.ln()).abs() < 1e-6);
    }

    #[test]
    fn map_dims_formula(
        lines in 1usize..24, axial in 2usize..60,
        wl in 1usize..8, wa in 1usize..20, sl in 1usize..4, sa in 1usize..5,
    ) {
        let w = WindowSpec { axial_samples: wa, lateral_lines: wl, stride_axial: sa, stride_lateral: sl, n_bins: 4 };
        match w.map_dims(lines, axial) {
            Ok((rows, cols)) => {
                prop_assert!(wl <= lines && wa <= axial);
                prop_assert_eq!(rows, (lines - wl) / sl + 1);
                prop_assert_eq!(cols, (axial - wa) / sa + 1);
            }
            Err(_) => prop_assert!(wl > lines || wa > axial),
        }
    }

    #[test]
    fn map_matches_per_window_estimates(
        seed in any::<u64>(), lines in 4usize..10, axial in 12usize..40,
        wl in 2usize..4, wa in 4usize..12, sl in 1usize..3, sa in 1usize..4, bins in 2usize..12,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = Array2::from_shape_fn((lines, axial), |_| rng.random_range(0.0..1.0));
        let w = WindowSpec { axial_samples: wa, lateral_lines: wl, stride_axial: sa, stride_lateral: sl, n_bins: bins };
        let map = entropy_map(&EnvelopeFrame::new(amp.clone()).unwrap(), w).unwrap();
        let (rows, cols) = map.values.dim();
        for r in 0..rows {
            for c in 0..cols {
                let win: Vec<f64> = amp
                    .slice(s![r * sl..r * sl + wl, c * sa..c * sa + wa])
                    .iter()
                    .copied()
                    .collect();
                prop_assert_eq!(map.values[[r, c]], estimate_entropy(&win, bins).unwrap());
            }
        }
    }
}

#[test]
fn homogeneous_speckle_gives_a_flat_map() {
    let spec = PhantomSpec {
        n_lines: 64,
        n_axial: 1024,
        scatterer_density_bg: 10.0,
        rng_seed: 11,
        ..Default::default()
    };
    let env = envelope(&simulate::<f64>(&spec).unwrap().rf).unwrap();
    let w = WindowSpec {
        stride_axial: 8,
        stride_lateral: 2,
        ..Default::default()
    };
    let map = entropy_map(&env, w).unwrap();
    let v: Vec<f64> = map.values.iter().copied().collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
    assert!(sd < 0.1 * mean.abs(), "mean {mean} sd {sd}");
}

#[test]
fn sparse_inclusion_is_detectable() {
    let inc = Ellipse {
        center_axial: 256.0,
        center_lateral: 32.0,
        radius_axial: 150.0,
        radius_lateral: 20.0,
    };
    let spec = PhantomSpec {
        n_lines: 64,
        n_axial: 512,
        scatterer_density_bg: 10.0,
        scatterer_density_inc: 0.5,
        inclusion: Some(inc),
        rng_seed: 5,
        ..Default::default()
    };
    let lf = simulate::<f64>(&spec).unwrap();
    let env = envelope(&lf.rf).unwrap();
    let w = WindowSpec {
        axial_samples: 40,
        lateral_lines: 6,
        stride_axial: 4,
        stride_lateral: 1,
        n_bins: 32,
    };
    let map = entropy_map(&env, w).unwrap();
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for ((r, c), &v) in map.values.indexed_iter() {
        let line = map.origin_offset.1 + (r * w.stride_lateral) as f64;
        let ax = map.origin_offset.0 + (c * w.stride_axial) as f64;
        if lf.truth_mask[[line.round() as usize, ax.round() as usize]] == 1 {
            inside.push(v);
        } else {
            outside.push(v);
        }
    }
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, var / v.len() as f64)
    };
    let ((mi, si), (mo, so)) = (stats(&inside), stats(&outside));
    assert!((mi - mo).abs() > 3.0 * (si + so).sqrt(), "inside {mi} outside {mo}");
}
