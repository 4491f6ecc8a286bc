use super::{HasParams, Mode, Param, Tensor4};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const BN_EPS: f64 = 1e-5;
/// Weight of the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel batch normalization with running statistics for inference.
#[derive(Debug, Clone)]
pub struct BatchNorm2d<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Param<T>,
    pub running_var: Param<T>,
    cache: Option<(Tensor4<T>, Vec<T>)>,
}

impl<T: Scalar> BatchNorm2d<T> {
    pub fn new(name: &str, channels: usize) -> Self {
        Self {
            gamma: Param::filled(format!("{name}.gamma"), &[channels], T::one()),
            beta: Param::zeros(format!("{name}.beta"), &[channels]),
            running_mean: Param::statistic(format!("{name}.running_mean"), &[channels], T::zero()),
            running_var: Param::statistic(format!("{name}.running_var"), &[channels], T::one()),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&mut self, x: &Tensor4<T>, mode: Mode) -> Result<Tensor4<T>> {
        let [n, c, h, w] = x.dims();
        if c != self.channels() {
            return Err(Error::Shape(format!("batch norm over {} channels got {c}", self.channels())));
        }
        let m = n * h * w;
        let eps = T::of(BN_EPS);
        let mut y = Tensor4::zeros(x.dims());
        match mode {
            Mode::Eval => {
                for ch in 0..c {
                    let inv = T::one() / (self.running_var.value[ch] + eps).sqrt();
                    let (mu, g, b) = (self.running_mean.value[ch], self.gamma.value[ch], self.beta.value[ch]);
                    for s in 0..n {
                        for (o, &v) in y.plane_mut(s, ch).iter_mut().zip(x.plane(s, ch)) {
                            *o = g * (v - mu) * inv + b;
                        }
                    }
                }
                self.cache = None;
            }
            Mode::Train => {
                if m < 2 {
                    return Err(Error::Batch(format!(
                        "batch norm needs >= 2 values per channel in training, got {m}"
                    )));
                }
                let mf = T::of_usize(m);
                let momentum = T::of(BN_MOMENTUM);
                let mut xhat = Tensor4::zeros(x.dims());
                let mut inv_std = vec![T::zero(); c];
                for ch in 0..c {
                    let mean = (0..n).map(|s| x.plane(s, ch).iter().copied().sum::<T>()).sum::<T>() / mf;
                    let var = (0..n)
                        .map(|s| x.plane(s, ch).iter().map(|&v| (v - mean) * (v - mean)).sum::<T>())
                        .sum::<T>()
                        / mf;
                    let inv = T::one() / (var + eps).sqrt();
                    inv_std[ch] = inv;
                    let (g, b) = (self.gamma.value[ch], self.beta.value[ch]);
                    for s in 0..n {
                        let src = x.plane(s, ch);
                        for (xh, &v) in xhat.plane_mut(s, ch).iter_mut().zip(src) {
                            *xh = (v - mean) * inv;
                        }
                        for (o, &xh) in y.plane_mut(s, ch).iter_mut().zip(xhat.plane(s, ch)) {
                            *o = g * xh + b;
                        }
                    }
                    let unbiased = var * mf / T::of_usize(m - 1);
                    let rm = &mut self.running_mean.value[ch];
                    *rm = momentum * *rm + (T::one() - momentum) * mean;
                    let rv = &mut self.running_var.value[ch];
                    *rv = momentum * *rv + (T::one() - momentum) * unbiased;
                }
                self.cache = Some((xhat, inv_std));
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        let (xhat, inv_std) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Shape("batch norm backward needs a training-mode forward".into()))?;
        dy.expect_dims(xhat.dims(), "batch norm output gradient")?;
        let [n, c, h, w] = xhat.dims();
        let mf = T::of_usize(n * h * w);
        let mut dx = Tensor4::zeros(xhat.dims());
        for ch in 0..c {
            let mut sum_dy = T::zero();
            let mut sum_dy_xhat = T::zero();
            for s in 0..n {
                for (&g, &xh) in dy.plane(s, ch).iter().zip(xhat.plane(s, ch)) {
                    sum_dy = sum_dy + g;
                    sum_dy_xhat = sum_dy_xhat + g * xh;
                }
            }
            self.gamma.grad[ch] = self.gamma.grad[ch] + sum_dy_xhat;
            self.beta.grad[ch] = self.beta.grad[ch] + sum_dy;
            let k = self.gamma.value[ch] * inv_std[ch] / mf;
            for s in 0..n {
                let src_dy = dy.plane(s, ch);
                let src_xh = xhat.plane(s, ch);
                for ((d, &g), &xh) in dx.plane_mut(s, ch).iter_mut().zip(src_dy).zip(src_xh) {
                    *d = k * (mf * g - sum_dy - xh * sum_dy_xhat);
                }
            }
        }
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

impl<T: Scalar> HasParams<T> for BatchNorm2d<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta, &self.running_mean, &self.running_var]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![
            &mut self.gamma,
            &mut self.beta,
            &mut self.running_mean,
            &mut self.running_var,
        ]
    }
}
