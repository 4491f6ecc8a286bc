use super::Param;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam with bias correction. Moments are kept per parameter, in the order
/// the parameters are passed to [`Adam::step`].
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64, beta1: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update of every parameter whose `is_updated()` holds. Frozen and
    /// statistic parameters keep their slots so moment indices stay aligned.
    pub fn step(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if p.grad.len() != p.value.len() || self.m[i].len() != p.len() {
                return Err(Error::Shape(format!("optimizer state mismatch for {}", p.name)));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = T::of(1.0 - self.beta1.powi(t));
        let c2 = T::of(1.0 - self.beta2.powi(t));
        let (lr, eps) = (T::of(self.lr), T::of(self.eps));
        for (i, p) in params.iter_mut().enumerate() {
            if !p.is_updated() {
                continue;
            }
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for k in 0..p.value.len() {
                let g = p.grad[k];
                m[k] = b1 * m[k] + (T::one() - b1) * g;
                v[k] = b2 * v[k] + (T::one() - b2) * g * g;
                let mhat = m[k] / c1;
                let vhat = v[k] / c2;
                p.value[k] = p.value[k] - lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = Param::<f64>::filled("w", &[3], 0.7);
        let mut opt = Adam::new(0.01, 0.9);
        for _ in 0..5 {
            opt.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.value, vec![0.7; 3]);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = Param::<f64>::filled("w", &[3], 1.0);
        p.grad = vec![3.0, -0.02, 250.0];
        let mut opt = Adam::new(0.001, 0.9);
        opt.step(&mut [&mut p]).unwrap();
        for (v, s) in p.value.iter().zip([1.0, -1.0, 1.0]) {
            assert!((1.0 - v - 0.001 * s).abs() < 1e-6);
        }
    }

    #[test]
    fn frozen_and_statistics_untouched() {
        let mut a = Param::<f64>::filled("a", &[2], 1.0);
        let mut b = Param::<f64>::statistic("b", &[2], 1.0);
        a.frozen = true;
        a.grad.fill(1.0);
        b.grad.fill(1.0);
        Adam::new(0.1, 0.9).step(&mut [&mut a, &mut b]).unwrap();
        assert_eq!(a.value, vec![1.0; 2]);
        assert_eq!(b.value, vec![1.0; 2]);
    }

    #[test]
    fn tensor_count_change_is_shape_error() {
        let mut a = Param::<f64>::zeros("a", &[2]);
        let mut b = Param::<f64>::zeros("b", &[2]);
        let mut opt = Adam::new(0.1, 0.9);
        opt.step(&mut [&mut a]).unwrap();
        assert!(matches!(opt.step(&mut [&mut a, &mut b]), Err(Error::Shape(_))));
    }
}
