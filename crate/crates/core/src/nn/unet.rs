use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    AttentionGate, BatchNorm2d, Conv2d, ConvTranspose2x2, HasParams, MatchingLayer, MaxPool2x2, Mode, Param,
    Relu, Sigmoid, Tensor4,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of pooling steps; the bottleneck sits at this level.
    pub depth: usize,
    pub base_channels: usize,
    pub input_hw: (usize, usize),
    pub use_attention: bool,
    pub use_matching_layer: bool,
    pub batchnorm: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            depth: 4,
            base_channels: 16,
            input_hw: (224, 224),
            use_attention: true,
            use_matching_layer: true,
            batchnorm: true,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::Config(format!("depth must be >= 2, got {}", self.depth)));
        }
        if self.base_channels == 0 {
            return Err(Error::Config("base_channels must be positive".into()));
        }
        let (h, w) = self.input_hw;
        self.check_hw(h, w)
    }

    fn check_hw(&self, h: usize, w: usize) -> Result<()> {
        let m = 1usize << self.depth;
        if h == 0 || w == 0 || h % m != 0 || w % m != 0 {
            return Err(Error::Config(format!(
                "input {h}x{w} is not divisible by 2^{} = {m}",
                self.depth
            )));
        }
        Ok(())
    }

    pub fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }
}

/// 3×3 convolution, optional batch norm, ReLU.
pub struct ConvUnit<T> {
    pub conv: Conv2d<T>,
    pub bn: Option<BatchNorm2d<T>>,
    relu: Relu<T>,
}

impl<T: Scalar> ConvUnit<T> {
    fn new(name: &str, in_ch: usize, out_ch: usize, batchnorm: bool, rng: &mut ChaCha8Rng) -> Self {
        let conv = Conv2d::new(&format!("{name}.conv"), in_ch, out_ch, 3, 1, 1, rng);
        let bn = batchnorm.then(|| BatchNorm2d::new(&format!("{name}.bn"), out_ch));
        Self {
            conv,
            bn,
            relu: Relu::default(),
        }
    }

    fn forward(&mut self, x: &Tensor4<T>, mode: Mode) -> Result<Tensor4<T>> {
        let mut y = self.conv.forward(x)?;
        if let Some(bn) = &mut self.bn {
            y = bn.forward(&y, mode)?;
        }
        Ok(self.relu.forward(&y))
    }

    fn backward(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        let mut d = self.relu.backward(dy)?;
        if let Some(bn) = &mut self.bn {
            d = bn.backward(&d)?;
        }
        self.conv.backward(&d)
    }

    fn clear_cache(&mut self) {
        self.conv.clear_cache();
        self.relu.clear_cache();
        if let Some(bn) = &mut self.bn {
            bn.clear_cache();
        }
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut v = self.conv.params();
        if let Some(bn) = &self.bn {
            v.extend(bn.params());
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = self.conv.params_mut();
        if let Some(bn) = &mut self.bn {
            v.extend(bn.params_mut());
        }
        v
    }
}

/// U-Net with optional attention gates on the skip connections.
pub struct UNet<T> {
    cfg: NetworkConfig,
    pub matching: Option<MatchingLayer<T>>,
    pub encoder: Vec<[ConvUnit<T>; 2]>,
    pools: Vec<MaxPool2x2>,
    pub ups: Vec<ConvTranspose2x2<T>>,
    pub gates: Vec<AttentionGate<T>>,
    pub decoder: Vec<[ConvUnit<T>; 2]>,
    pub head: Conv2d<T>,
    sigmoid: Sigmoid<T>,
}

impl<T: Scalar> UNet<T> {
    /// Builds a network with He-initialized weights. Gate parameters come
    /// from their own RNG stream so the rest of the network is identical
    /// with and without attention.
    pub fn new(cfg: NetworkConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gate_rng = ChaCha8Rng::seed_from_u64(seed);
        gate_rng.set_stream(1);
        let bn = cfg.batchnorm;
        let matching = cfg.use_matching_layer.then(|| MatchingLayer::new("match", &mut rng));
        let in_ch = if cfg.use_matching_layer { 3 } else { 1 };
        let mut encoder = Vec::with_capacity(cfg.depth + 1);
        for l in 0..=cfg.depth {
            let cin = if l == 0 { in_ch } else { cfg.channels(l - 1) };
            let c = cfg.channels(l);
            encoder.push([
                ConvUnit::new(&format!("enc{l}.unit0"), cin, c, bn, &mut rng),
                ConvUnit::new(&format!("enc{l}.unit1"), c, c, bn, &mut rng),
            ]);
        }
        let mut ups = Vec::with_capacity(cfg.depth);
        let mut gates = Vec::new();
        let mut decoder = Vec::with_capacity(cfg.depth);
        for l in 0..cfg.depth {
            let (c, c_below) = (cfg.channels(l), cfg.channels(l + 1));
            ups.push(ConvTranspose2x2::new(&format!("up{l}"), c_below, c, &mut rng));
            if cfg.use_attention {
                gates.push(AttentionGate::new(&format!("gate{l}"), c, c_below, &mut gate_rng));
            }
            decoder.push([
                ConvUnit::new(&format!("dec{l}.unit0"), 2 * c, c, bn, &mut rng),
                ConvUnit::new(&format!("dec{l}.unit1"), c, c, bn, &mut rng),
            ]);
        }
        let head = Conv2d::new("head", cfg.channels(0), 1, 1, 1, 0, &mut rng);
        Ok(Self {
            pools: vec![MaxPool2x2::default(); cfg.depth],
            cfg,
            matching,
            encoder,
            ups,
            gates,
            decoder,
            head,
            sigmoid: Sigmoid::default(),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    /// `[N,1,H,W]` → `[N,1,H,W]` probabilities.
    pub fn forward(&mut self, x: &Tensor4<T>, mode: Mode) -> Result<Tensor4<T>> {
        let [_, c, h, w] = x.dims();
        if c != 1 {
            return Err(Error::Config(format!("network input must have 1 channel, got {c}")));
        }
        self.cfg.check_hw(h, w)?;
        let depth = self.cfg.depth;
        let mut cur = match &mut self.matching {
            Some(m) => m.forward(x)?,
            None => x.clone(),
        };
        let mut skips = Vec::with_capacity(depth);
        for l in 0..=depth {
            let [u0, u1] = &mut self.encoder[l];
            cur = u1.forward(&u0.forward(&cur, mode)?, mode)?;
            if l < depth {
                let pooled = self.pools[l].forward(&cur)?;
                skips.push(std::mem::replace(&mut cur, pooled));
            }
        }
        for l in (0..depth).rev() {
            let up = self.ups[l].forward(&cur)?;
            let skip = skips.pop().expect("one skip per level");
            let gated = match self.gates.get_mut(l) {
                Some(gate) => gate.forward(&skip, &cur)?,
                None => skip,
            };
            let [u0, u1] = &mut self.decoder[l];
            cur = Tensor4::concat_channels(&gated, &up)?;
            cur = u1.forward(&u0.forward(&cur, mode)?, mode)?;
        }
        let logits = self.head.forward(&cur)?;
        Ok(self.sigmoid.forward(&logits))
    }

    /// Backpropagates `d_out` through the last forward pass, accumulating
    /// parameter gradients. Returns the input gradient.
    pub fn backward(&mut self, d_out: &Tensor4<T>) -> Result<Tensor4<T>> {
        let depth = self.cfg.depth;
        let mut d = self.head.backward(&self.sigmoid.backward(d_out)?)?;
        let mut d_skips = Vec::with_capacity(depth);
        for l in 0..depth {
            let [u0, u1] = &mut self.decoder[l];
            d = u0.backward(&u1.backward(&d)?)?;
            let (d_gated, d_up) = d.split_channels(self.cfg.channels(l))?;
            let mut d_below = self.ups[l].backward(&d_up)?;
            let d_skip = match self.gates.get_mut(l) {
                Some(gate) => {
                    let (dx, dg) = gate.backward(&d_gated)?;
                    d_below.add_assign(&dg)?;
                    dx
                }
                None => d_gated,
            };
            d_skips.push(d_skip);
            d = d_below;
        }
        for l in (0..=depth).rev() {
            if l < depth {
                d = self.pools[l].backward(&d)?;
                d.add_assign(&d_skips[l])?;
            }
            let [u0, u1] = &mut self.encoder[l];
            d = u0.backward(&u1.backward(&d)?)?;
        }
        if let Some(m) = &mut self.matching {
            d = m.backward(&d)?;
        }
        Ok(d)
    }

    /// Inference pass that leaves no cached activations behind.
    pub fn predict(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let y = self.forward(x, Mode::Eval)?;
        self.clear_cache();
        Ok(y)
    }

    pub fn clear_cache(&mut self) {
        if let Some(m) = &mut self.matching {
            m.clear_cache();
        }
        for units in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            units.iter_mut().for_each(ConvUnit::clear_cache);
        }
        self.pools.iter_mut().for_each(MaxPool2x2::clear_cache);
        self.ups.iter_mut().for_each(ConvTranspose2x2::clear_cache);
        self.gates.iter_mut().for_each(AttentionGate::clear_cache);
        self.head.clear_cache();
        self.sigmoid.clear_cache();
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn param(&self, name: &str) -> Option<&Param<T>> {
        self.params().into_iter().find(|p| p.name == name)
    }

    /// Number of trainable scalars.
    pub fn n_trainable(&self) -> usize {
        self.params().iter().filter(|p| p.trainable).map(|p| p.len()).sum()
    }
}

impl<T: Scalar> HasParams<T> for UNet<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut v = Vec::new();
        if let Some(m) = &self.matching {
            v.extend(m.params());
        }
        for units in &self.encoder {
            units.iter().for_each(|u| v.extend(u.params()));
        }
        for l in 0..self.cfg.depth {
            v.extend(self.ups[l].params());
            if let Some(g) = self.gates.get(l) {
                v.extend(g.params());
            }
            self.decoder[l].iter().for_each(|u| v.extend(u.params()));
        }
        v.extend(self.head.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = Vec::new();
        if let Some(m) = &mut self.matching {
            v.extend(m.params_mut());
        }
        for units in &mut self.encoder {
            units.iter_mut().for_each(|u| v.extend(u.params_mut()));
        }
        let mut gates = self.gates.iter_mut();
        for (up, dec) in self.ups.iter_mut().zip(self.decoder.iter_mut()) {
            v.extend(up.params_mut());
            if let Some(g) = gates.next() {
                v.extend(g.params_mut());
            }
            dec.iter_mut().for_each(|u| v.extend(u.params_mut()));
        }
        v.extend(self.head.params_mut());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn small(attention: bool, matching: bool, batchnorm: bool) -> NetworkConfig {
        NetworkConfig {
            depth: 2,
            base_channels: 4,
            input_hw: (16, 16),
            use_attention: attention,
            use_matching_layer: matching,
            batchnorm,
        }
    }

    fn input(n: usize, h: usize, w: usize, seed: u64) -> Tensor4<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor4::from_fn([n, 1, h, w], |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn shape_and_range() {
        let mut net = UNet::<f64>::new(small(true, true, true), 1).unwrap();
        let x = input(2, 16, 16, 2);
        let y = net.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.dims(), [2, 1, 16, 16]);
        assert!(y.data().iter().all(|&v| v > 0.0 && v < 1.0));
        let y = net.predict(&x).unwrap();
        assert!(y.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn parameter_names_are_unique() {
        let net = UNet::<f32>::new(small(true, true, true), 1).unwrap();
        let mut names: Vec<_> = net.params().iter().map(|p| p.name.clone()).collect();
        assert!(names.contains(&"enc0.unit0.conv.weight".to_string()));
        assert!(names.contains(&"gate1.psi.bias".to_string()));
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        let mut net = net;
        assert_eq!(net.params_mut().len(), n);
    }

    #[test]
    fn config_errors() {
        let mut bad = small(false, false, false);
        bad.depth = 1;
        assert!(matches!(UNet::<f64>::new(bad, 0), Err(Error::Config(_))));
        let mut bad = small(false, false, false);
        bad.input_hw = (18, 16);
        assert!(matches!(UNet::<f64>::new(bad, 0), Err(Error::Config(_))));
        let mut net = UNet::<f64>::new(small(false, false, false), 0).unwrap();
        assert!(matches!(net.forward(&input(1, 14, 16, 0), Mode::Eval), Err(Error::Config(_))));
        assert!(matches!(
            net.forward(&Tensor4::zeros([1, 2, 16, 16]), Mode::Eval),
            Err(Error::Config(_))
        ));
    }
}
