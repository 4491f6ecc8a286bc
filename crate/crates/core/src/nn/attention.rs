use rand::Rng;

use super::activation::open_sigmoid;
use super::upsample::{upsample_bilinear, upsample_bilinear_backward};
use super::{Conv2d, HasParams, Param, Relu, Tensor4};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct GateCache<T> {
    x: Tensor4<T>,
    alpha: Tensor4<T>,
    alpha_up: Tensor4<T>,
}

/// Additive attention gate on a skip connection.
///
/// `α = σ(ψ(relu(θx + φg)))` is computed on the coarse grid of `g`,
/// upsampled bilinearly to `x` and applied to every channel of `x`.
pub struct AttentionGate<T> {
    pub theta: Conv2d<T>,
    pub phi: Conv2d<T>,
    pub psi: Conv2d<T>,
    relu: Relu<T>,
    cache: Option<GateCache<T>>,
}

impl<T: Scalar> AttentionGate<T> {
    /// Gate for skip features with `x_ch` channels and gating features with
    /// `g_ch` channels; the intermediate width is half the skip width.
    pub fn new(name: &str, x_ch: usize, g_ch: usize, rng: &mut impl Rng) -> Self {
        let inter = (x_ch / 2).max(1);
        Self {
            theta: Conv2d::new(&format!("{name}.theta"), x_ch, inter, 1, 2, 0, rng),
            phi: Conv2d::new(&format!("{name}.phi"), g_ch, inter, 1, 1, 0, rng),
            psi: Conv2d::new(&format!("{name}.psi"), inter, 1, 1, 1, 0, rng),
            relu: Relu::default(),
            cache: None,
        }
    }

    /// Coefficients of the last forward pass on the coarse grid.
    pub fn last_alpha(&self) -> Option<&Tensor4<T>> {
        self.cache.as_ref().map(|c| &c.alpha)
    }

    pub fn forward(&mut self, x: &Tensor4<T>, g: &Tensor4<T>) -> Result<Tensor4<T>> {
        let [n, c, h, w] = x.dims();
        let [gn, _, gh, gw] = g.dims();
        if gn != n || h != 2 * gh || w != 2 * gw {
            return Err(Error::Shape(format!(
                "attention gate needs skip dims twice the gating dims, got {:?} and {:?}",
                x.dims(),
                g.dims()
            )));
        }
        let mut pre = self.theta.forward(x)?;
        pre.add_assign(&self.phi.forward(g)?)?;
        let act = self.relu.forward(&pre);
        let alpha = self.psi.forward(&act)?.map(open_sigmoid);
        let alpha_up = upsample_bilinear(&alpha, h, w)?;
        let mut out = x.clone();
        for s in 0..n {
            let a = alpha_up.plane(s, 0).to_vec();
            for ch in 0..c {
                for (o, &k) in out.plane_mut(s, ch).iter_mut().zip(&a) {
                    *o = *o * k;
                }
            }
        }
        self.cache = Some(GateCache {
            x: x.clone(),
            alpha,
            alpha_up,
        });
        Ok(out)
    }

    /// Returns gradients with respect to `x` and `g`.
    pub fn backward(&mut self, dy: &Tensor4<T>) -> Result<(Tensor4<T>, Tensor4<T>)> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Shape("attention backward called before forward".into()))?;
        dy.expect_dims(cache.x.dims(), "attention output gradient")?;
        let [n, c, h, w] = cache.x.dims();
        let mut dx = Tensor4::zeros(cache.x.dims());
        let mut d_alpha_up = Tensor4::zeros([n, 1, h, w]);
        for s in 0..n {
            let a = cache.alpha_up.plane(s, 0).to_vec();
            let mut acc = vec![T::zero(); h * w];
            for ch in 0..c {
                let g = dy.plane(s, ch);
                let xv = cache.x.plane(s, ch);
                for (k, d) in dx.plane_mut(s, ch).iter_mut().enumerate() {
                    *d = g[k] * a[k];
                    acc[k] = acc[k] + g[k] * xv[k];
                }
            }
            d_alpha_up.plane_mut(s, 0).copy_from_slice(&acc);
        }
        let d_alpha = upsample_bilinear_backward(cache.alpha.dims(), &d_alpha_up)?;
        let d_logit = cache.alpha.zip_map(&d_alpha, |a, g| g * a * (T::one() - a))?;
        let d_act = self.psi.backward(&d_logit)?;
        let d_pre = self.relu.backward(&d_act)?;
        dx.add_assign(&self.theta.backward(&d_pre)?)?;
        let dg = self.phi.backward(&d_pre)?;
        Ok((dx, dg))
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
        self.relu.clear_cache();
        self.theta.clear_cache();
        self.phi.clear_cache();
        self.psi.clear_cache();
    }
}

impl<T: Scalar> HasParams<T> for AttentionGate<T> {
    fn params(&self) -> Vec<&Param<T>> {
        [self.theta.params(), self.phi.params(), self.psi.params()].concat()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = self.theta.params_mut();
        v.extend(self.phi.params_mut());
        v.extend(self.psi.params_mut());
        v
    }
}

/// Learnable 1×1 convolution from one gray channel to three, no activation.
/// Initialized to replicate the input into every channel.
pub struct MatchingLayer<T> {
    pub conv: Conv2d<T>,
}

impl<T: Scalar> MatchingLayer<T> {
    pub fn new(name: &str, rng: &mut impl Rng) -> Self {
        let mut conv = Conv2d::new(name, 1, 3, 1, 1, 0, rng);
        conv.weight.value.fill(T::one());
        Self { conv }
    }

    pub fn forward(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        if x.c() != 1 {
            return Err(Error::Shape(format!("matching layer expects 1 channel, got {}", x.c())));
        }
        self.conv.forward(x)
    }

    pub fn backward(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        self.conv.backward(dy)
    }

    pub fn clear_cache(&mut self) {
        self.conv.clear_cache();
    }
}

impl<T: Scalar> HasParams<T> for MatchingLayer<T> {
    fn params(&self) -> Vec<&Param<T>> {
        self.conv.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.conv.params_mut()
    }
}
