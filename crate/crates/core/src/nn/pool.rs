use super::Tensor4;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 2×2 max pooling; returns the pooled tensor and, per output element, the
/// flat index of the winning input element.
pub fn maxpool2x2<T: Scalar>(x: &Tensor4<T>) -> Result<(Tensor4<T>, Vec<usize>)> {
    let [n, c, h, w] = x.dims();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("max pooling needs even dims, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut y = Tensor4::zeros([n, c, oh, ow]);
    let mut argmax = Vec::with_capacity(y.len());
    let data = x.data();
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * h * w;
            let out = y.plane_mut(b, ch);
            for i in 0..oh {
                for j in 0..ow {
                    let mut best = base + 2 * i * w + 2 * j;
                    for k in [best + 1, best + w, best + w + 1] {
                        // First occurrence wins ties.
                        if data[k] > data[best] {
                            best = k;
                        }
                    }
                    out[i * ow + j] = data[best];
                    argmax.push(best);
                }
            }
        }
    }
    Ok((y, argmax))
}

/// Routes each output gradient to its recorded argmax.
pub fn maxpool2x2_backward<T: Scalar>(input_dims: [usize; 4], argmax: &[usize], dy: &Tensor4<T>) -> Result<Tensor4<T>> {
    if dy.len() != argmax.len() {
        return Err(Error::Shape("pooling gradient does not match recorded argmax".into()));
    }
    let mut dx = Tensor4::zeros(input_dims);
    let d = dx.data_mut();
    for (&k, &g) in argmax.iter().zip(dy.data()) {
        d[k] = d[k] + g;
    }
    Ok(dx)
}

#[derive(Debug, Clone, Default)]
pub struct MaxPool2x2 {
    cache: Option<([usize; 4], Vec<usize>)>,
}

impl MaxPool2x2 {
    pub fn forward<T: Scalar>(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let (y, idx) = maxpool2x2(x)?;
        self.cache = Some((x.dims(), idx));
        Ok(y)
    }

    pub fn backward<T: Scalar>(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        let (dims, idx) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Shape("pooling backward called before forward".into()))?;
        maxpool2x2_backward(*dims, idx, dy)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{assert_close, numeric_grad, random_tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_window() {
        let x = Tensor4::from_vec([1, 1, 2, 2], vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let (y, idx) = maxpool2x2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(idx, vec![3]);
    }

    #[test]
    fn constant_input_routes_to_argmax_only() {
        let x = Tensor4::full([1, 2, 4, 4], 0.5f64);
        let (y, idx) = maxpool2x2(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.5));
        let dx = maxpool2x2_backward(x.dims(), &idx, &Tensor4::full(y.dims(), 1.0)).unwrap();
        assert_eq!(dx.sum(), y.len() as f64);
        for &k in &idx {
            assert_eq!(dx.data()[k], 1.0);
        }
        assert_eq!(dx.data().iter().filter(|&&v| v != 0.0).count(), idx.len());
    }

    #[test]
    fn odd_dims_rejected() {
        assert!(matches!(maxpool2x2(&Tensor4::<f64>::zeros([1, 1, 3, 4])), Err(Error::Shape(_))));
    }

    #[test]
    fn gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_tensor([2, 2, 4, 6], &mut rng);
        let (y, idx) = maxpool2x2(&x).unwrap();
        let r = random_tensor(y.dims(), &mut rng);
        let dx = maxpool2x2_backward(x.dims(), &idx, &r).unwrap();
        let num = numeric_grad(x.data(), |v| {
            let (y, _) = maxpool2x2(&Tensor4::from_vec(x.dims(), v.to_vec()).unwrap()).unwrap();
            y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
        });
        assert_close(dx.data(), &num, 0.0, 1e-4);
    }
}
