use super::Tensor4;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
pub fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Sigmoid kept strictly inside (0, 1): saturated logits stop one ulp short
/// of the bounds instead of rounding onto them.
#[inline]
pub fn open_sigmoid<T: Scalar>(v: T) -> T {
    sigmoid(v)
        .max(T::min_positive_value())
        .min(T::one() - T::epsilon() / T::of(2.0))
}

#[derive(Debug, Clone, Default)]
pub struct Relu<T> {
    input: Option<Tensor4<T>>,
}

impl<T: Scalar> Relu<T> {
    pub fn forward(&mut self, x: &Tensor4<T>) -> Tensor4<T> {
        self.input = Some(x.clone());
        x.map(|v| v.max(T::zero()))
    }

    pub fn backward(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Shape("relu backward called before forward".into()))?;
        x.zip_map(dy, |x, g| if x > T::zero() { g } else { T::zero() })
    }

    pub fn clear_cache(&mut self) {
        self.input = None;
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sigmoid<T> {
    output: Option<Tensor4<T>>,
}

impl<T: Scalar> Sigmoid<T> {
    pub fn forward(&mut self, x: &Tensor4<T>) -> Tensor4<T> {
        let y = x.map(open_sigmoid);
        self.output = Some(y.clone());
        y
    }

    pub fn backward(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        let y = self
            .output
            .as_ref()
            .ok_or_else(|| Error::Shape("sigmoid backward called before forward".into()))?;
        y.zip_map(dy, |s, g| g * s * (T::one() - s))
    }

    pub fn clear_cache(&mut self) {
        self.output = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert_eq!(sigmoid(800.0f64), 1.0);
        assert!((sigmoid(2.0f64) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn open_sigmoid_never_touches_the_bounds() {
        for v in [-1e4f64, -800.0, -40.0, 40.0, 800.0, 1e4] {
            let s = open_sigmoid(v);
            assert!(s > 0.0 && s < 1.0, "{v}");
        }
        let s = open_sigmoid(1e4f32);
        assert!(s > 0.0 && s < 1.0);
        assert_eq!(open_sigmoid(0.3f64), sigmoid(0.3f64));
    }
}
