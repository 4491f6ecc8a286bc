use ndarray::Array2;
use proptest::prelude::*;
use qus_core::nn::{
    dice_loss, train, train_network, Adam, AttentionGate, HasParams, Mode, NetworkConfig, Param, Sample, Tensor4,
    TrainConfig, UNet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cfg(attention: bool, batchnorm: bool) -> NetworkConfig {
    NetworkConfig {
        depth: 2,
        base_channels: 2,
        input_hw: (32, 32),
        use_attention: attention,
        use_matching_layer: true,
        batchnorm,
    }
}

fn random(dims: [usize; 4], seed: u64) -> Tensor4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor4::from_fn(dims, |_| rng.sample(StandardNormal))
}

fn flat(net: &UNet<f64>) -> Vec<f64> {
    net.params().iter().filter(|p| p.trainable).flat_map(|p| p.value.clone()).collect()
}

fn load(net: &mut UNet<f64>, v: &[f64]) {
    let mut off = 0;
    for p in net.params_mut().into_iter().filter(|p| p.trainable) {
        let n = p.len();
        p.value.copy_from_slice(&v[off..off + n]);
        off += n;
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn end_to_end_gradient_check() {
    let x = random([1, 1, 32, 32], 1);
    let r = random([1, 1, 32, 32], 2);
    let mut net = UNet::<f64>::new(cfg(true, true), 3).unwrap();
    // Zero biases put ReLUs fed by all-zero features exactly on their kink,
    // so every parameter gets a random value.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for p in net.params_mut().into_iter().filter(|p| p.trainable && p.shape.len() == 1) {
        for v in p.value.iter_mut() {
            *v += 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let theta = flat(&net);
    let objective = |net: &mut UNet<f64>, x: &Tensor4<f64>| -> f64 {
        let y = net.forward(x, Mode::Train).unwrap();
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
    };
    net.zero_grad();
    objective(&mut net, &x);
    let dx = net.backward(&r.clone()).unwrap();
    let dtheta: Vec<f64> = net.params().iter().filter(|p| p.trainable).flat_map(|p| p.grad.clone()).collect();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut v = theta.clone();
    for i in 0..v.len() {
        let orig = v[i];
        v[i] = orig + eps;
        load(&mut net, &v);
        let up = objective(&mut net, &x);
        v[i] = orig - eps;
        load(&mut net, &v);
        let down = objective(&mut net, &x);
        v[i] = orig;
        worst = worst.max(rel(dtheta[i], (up - down) / (2.0 * eps)));
    }
    load(&mut net, &theta);
    let mut xv = x.clone();
    for i in 0..x.len() {
        let orig = xv.data()[i];
        xv.data_mut()[i] = orig + eps;
        let up = objective(&mut net, &xv);
        xv.data_mut()[i] = orig - eps;
        let down = objective(&mut net, &xv);
        xv.data_mut()[i] = orig;
        worst = worst.max(rel(dx.data()[i], (up - down) / (2.0 * eps)));
    }
    assert!(worst < 1e-3, "worst relative error {worst}");
}

#[test]
fn open_gates_reduce_to_plain_unet() {
    let x = random([2, 1, 32, 32], 4);
    let mut plain = UNet::<f64>::new(cfg(false, true), 7).unwrap();
    let mut gated = UNet::<f64>::new(cfg(true, true), 7).unwrap();
    for g in gated.gates.iter_mut() {
        g.psi.weight.value.fill(0.0);
        g.psi.bias.value.fill(40.0);
    }
    for mode in [Mode::Train, Mode::Eval] {
        let a = plain.forward(&x, mode).unwrap();
        let b = gated.forward(&x, mode).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}

#[test]
fn adam_minimizes_a_quadratic_bowl() {
    let mut w = Param::<f64>::filled("w", &[1], 1.0);
    let mut opt = Adam::new(0.05, 0.9);
    for _ in 0..500 {
        w.grad[0] = 2.0 * w.value[0];
        opt.step(&mut [&mut w]).unwrap();
    }
    assert!(w.value[0].abs() < 1e-3, "{}", w.value[0]);
}

fn blob_sample(hw: usize, seed: u64) -> Sample<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cy, cx) = (hw as f32 * 0.45, hw as f32 * 0.55);
    let mask = Array2::from_shape_fn((hw, hw), |(y, x)| {
        let (dy, dx) = ((y as f32 - cy) / 9.0, (x as f32 - cx) / 6.0);
        if dy * dy + dx * dx <= 1.0 {
            1.0
        } else {
            0.0
        }
    });
    let image = mask.mapv(|m| (0.25 + 0.4 * m + rng.random_range(-0.15f32..0.15)).clamp(0.0, 1.0));
    Sample { image, mask }
}

#[test]
fn overfits_a_single_pair() {
    let net_cfg = NetworkConfig {
        base_channels: 8,
        ..cfg(true, true)
    };
    let tc = TrainConfig {
        lr: 0.005,
        batch_size: 1,
        max_epochs: 300,
        early_stop_epochs: 300,
        rng_seed: 1,
        ..Default::default()
    };
    let s = blob_sample(32, 0);
    let (_, out) = train(&[s.clone()], &[s], &net_cfg, &tc).unwrap();
    assert!(out.best_val_dice > 0.95, "best {} at {}", out.best_val_dice, out.best_epoch);
}

#[test]
fn training_is_bit_reproducible() {
    let net_cfg = NetworkConfig {
        input_hw: (16, 16),
        ..cfg(true, true)
    };
    let tc = TrainConfig {
        lr: 0.01,
        batch_size: 2,
        max_epochs: 4,
        rng_seed: 9,
        ..Default::default()
    };
    let set: Vec<_> = (0..3).map(|i| blob_sample(16, i)).collect();
    let (a, ha) = train(&set, &set[..1], &net_cfg, &tc).unwrap();
    let (b, hb) = train(&set, &set[..1], &net_cfg, &tc).unwrap();
    assert_eq!(ha, hb);
    let bits = |n: &UNet<f32>| -> Vec<u32> { n.params().iter().flat_map(|p| p.value.iter().map(|v| v.to_bits())).collect() };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn stagnant_validation_halts_after_early_stop_window() {
    let net_cfg = NetworkConfig {
        input_hw: (16, 16),
        ..cfg(true, false)
    };
    let s = blob_sample(16, 3);
    let frozen_lr = TrainConfig {
        lr: 0.0,
        batch_size: 1,
        ..Default::default()
    };
    let (_, out) = train(&[s.clone()], &[s.clone()], &net_cfg, &frozen_lr).unwrap();
    assert_eq!(out.history.len(), 20);
    assert!(out.stopped_early);

    // Frozen tensors with a positive lr expose the drop cadence.
    let mut net = UNet::<f32>::new(net_cfg, 0).unwrap();
    for p in net.params_mut() {
        p.frozen = true;
    }
    let tc = TrainConfig {
        lr: 0.0005,
        batch_size: 1,
        ..Default::default()
    };
    let out = train_network(&mut net, &[s.clone()], &[s], &tc, |_| {}).unwrap();
    let lrs: Vec<f64> = out.history.iter().map(|r| r.lr).collect();
    let expected: Vec<f64> = (1..=20).map(|e: i32| 0.0005 * 0.5f64.powi((e - 1) / 4)).collect();
    assert_eq!(lrs, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unet_output_in_open_unit_interval(seed in any::<u64>(), scale in 0.1f64..100.0) {
        let c = NetworkConfig { input_hw: (8, 8), ..cfg(true, true) };
        let mut net = UNet::<f64>::new(c, seed).unwrap();
        let x = random([2, 1, 8, 8], seed ^ 5).map(|v| v * scale);
        let y = net.forward(&x, Mode::Train).unwrap();
        prop_assert!(y.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn gate_coefficients_in_open_unit_interval(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gate = AttentionGate::<f64>::new("g", 4, 8, &mut rng);
        let x = random([1, 4, 6, 6], seed ^ 1).map(|v| v * scale);
        let g = random([1, 8, 3, 3], seed ^ 2).map(|v| v * scale);
        gate.forward(&x, &g).unwrap();
        prop_assert!(gate.last_alpha().unwrap().data().iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn dice_loss_bounded_and_flip_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Tensor4::<f64>::from_fn([2, 1, 5, 7], |_| rng.random_range(0.001..0.999));
        let t = Tensor4::<f64>::from_fn([2, 1, 5, 7], |_| if rng.random_bool(0.4) { 1.0 } else { 0.0 });
        let (l, _) = dice_loss(&p, &t).unwrap();
        prop_assert!((0.0..=1.0).contains(&l));
        let (lf, _) = dice_loss(&p.hflip(), &t.hflip()).unwrap();
        prop_assert_eq!(l, lf);
    }
}
