use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

/// Named parameter tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<T>,
    pub grad: Vec<T>,
    /// Updated by the optimizer; running statistics are not.
    pub trainable: bool,
    /// Trainable in principle but held fixed (e.g. imported blocks).
    pub frozen: bool,
}

impl<T: Scalar> Param<T> {
    pub fn filled(name: impl Into<String>, shape: &[usize], v: T) -> Self {
        let len = shape.iter().product();
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            value: vec![v; len],
            grad: vec![T::zero(); len],
            trainable: true,
            frozen: false,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self::filled(name, shape, T::zero())
    }

    /// He-normal initialization, standard deviation `sqrt(2 / fan_in)`.
    pub fn he_normal(name: impl Into<String>, shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(name, shape);
        let std = (2.0 / fan_in as f64).sqrt();
        for v in p.value.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = T::of(z * std);
        }
        p
    }

    pub fn statistic(name: impl Into<String>, shape: &[usize], v: T) -> Self {
        Self {
            trainable: false,
            ..Self::filled(name, shape, v)
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }

    pub fn is_updated(&self) -> bool {
        self.trainable && !self.frozen
    }
}

/// Anything that owns parameters.
pub trait HasParams<T> {
    fn params(&self) -> Vec<&Param<T>>;
    fn params_mut(&mut self) -> Vec<&mut Param<T>>;
}
