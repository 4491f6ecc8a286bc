//! 2×2 stride-2 transposed convolution (exact 2× upsampling).

use rand::Rng;

use super::{HasParams, Param, Tensor4};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `y[n,o,2i+a,2j+b] = bias[o] + Σ_c x[n,c,i,j]·w[c,o,a,b]`, weights `[in, out, 2, 2]`.
pub fn transposed_conv2d<T: Scalar>(x: &Tensor4<T>, weight: &Tensor4<T>, bias: &[T]) -> Result<Tensor4<T>> {
    let [n, ic, h, w] = x.dims();
    let [wic, oc, kh, kw] = weight.dims();
    if wic != ic || kh != 2 || kw != 2 || bias.len() != oc {
        return Err(Error::Shape(format!(
            "transposed conv weights {:?} / bias {} incompatible with input {:?}",
            weight.dims(),
            bias.len(),
            x.dims()
        )));
    }
    let ow = 2 * w;
    let mut y = Tensor4::zeros([n, oc, 2 * h, ow]);
    let wd = weight.data();
    for b in 0..n {
        for o in 0..oc {
            let out = y.plane_mut(b, o);
            out.fill(bias[o]);
            for c in 0..ic {
                let inp = x.plane(b, c);
                let k = |a: usize, bb: usize| wd[((c * oc + o) * 2 + a) * 2 + bb];
                let (w00, w01, w10, w11) = (k(0, 0), k(0, 1), k(1, 0), k(1, 1));
                for i in 0..h {
                    let (top, bottom) = out[2 * i * ow..(2 * i + 2) * ow].split_at_mut(ow);
                    for j in 0..w {
                        let v = inp[i * w + j];
                        top[2 * j] = top[2 * j] + v * w00;
                        top[2 * j + 1] = top[2 * j + 1] + v * w01;
                        bottom[2 * j] = bottom[2 * j] + v * w10;
                        bottom[2 * j + 1] = bottom[2 * j + 1] + v * w11;
                    }
                }
            }
        }
    }
    Ok(y)
}

/// Gradients of [`transposed_conv2d`]: `(dx, dweight, dbias)`.
pub fn transposed_conv2d_backward<T: Scalar>(
    x: &Tensor4<T>,
    weight: &Tensor4<T>,
    dy: &Tensor4<T>,
) -> Result<(Tensor4<T>, Tensor4<T>, Vec<T>)> {
    let [n, ic, h, w] = x.dims();
    let [_, oc, _, _] = weight.dims();
    dy.expect_dims([n, oc, 2 * h, 2 * w], "transposed conv output gradient")?;
    let ow = 2 * w;
    let mut dx = Tensor4::zeros(x.dims());
    let mut dw = Tensor4::zeros(weight.dims());
    let mut db = vec![T::zero(); oc];
    let wd = weight.data();
    for b in 0..n {
        for o in 0..oc {
            let g = dy.plane(b, o);
            db[o] = db[o] + g.iter().copied().sum::<T>();
            for c in 0..ic {
                let base = (c * oc + o) * 4;
                let (w00, w01, w10, w11) = (wd[base], wd[base + 1], wd[base + 2], wd[base + 3]);
                let inp = x.plane(b, c);
                let (mut a00, mut a01, mut a10, mut a11) = (T::zero(), T::zero(), T::zero(), T::zero());
                let dxp = dx.plane_mut(b, c);
                for i in 0..h {
                    let top = &g[2 * i * ow..(2 * i + 1) * ow];
                    let bottom = &g[(2 * i + 1) * ow..(2 * i + 2) * ow];
                    for j in 0..w {
                        let v = inp[i * w + j];
                        let (g00, g01, g10, g11) = (top[2 * j], top[2 * j + 1], bottom[2 * j], bottom[2 * j + 1]);
                        dxp[i * w + j] = dxp[i * w + j] + g00 * w00 + g01 * w01 + g10 * w10 + g11 * w11;
                        a00 = a00 + v * g00;
                        a01 = a01 + v * g01;
                        a10 = a10 + v * g10;
                        a11 = a11 + v * g11;
                    }
                }
                let dwd = dw.data_mut();
                dwd[base] = dwd[base] + a00;
                dwd[base + 1] = dwd[base + 1] + a01;
                dwd[base + 2] = dwd[base + 2] + a10;
                dwd[base + 3] = dwd[base + 3] + a11;
            }
        }
    }
    Ok((dx, dw, db))
}

#[derive(Debug, Clone)]
pub struct ConvTranspose2x2<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    input: Option<Tensor4<T>>,
}

impl<T: Scalar> ConvTranspose2x2<T> {
    pub fn new(name: &str, in_ch: usize, out_ch: usize, rng: &mut impl Rng) -> Self {
        Self {
            weight: Param::he_normal(format!("{name}.weight"), &[in_ch, out_ch, 2, 2], in_ch * 4, rng),
            bias: Param::zeros(format!("{name}.bias"), &[out_ch]),
            input: None,
        }
    }

    fn weight_tensor(&self) -> Tensor4<T> {
        let s = &self.weight.shape;
        Tensor4::from_vec([s[0], s[1], s[2], s[3]], self.weight.value.clone()).expect("weight shape")
    }

    pub fn forward(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let y = transposed_conv2d(x, &self.weight_tensor(), &self.bias.value)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Shape("transposed conv backward called before forward".into()))?;
        let (dx, dw, db) = transposed_conv2d_backward(x, &self.weight_tensor(), dy)?;
        for (g, d) in self.weight.grad.iter_mut().zip(dw.data()) {
            *g = *g + *d;
        }
        for (g, d) in self.bias.grad.iter_mut().zip(&db) {
            *g = *g + *d;
        }
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.input = None;
    }
}

impl<T: Scalar> HasParams<T> for ConvTranspose2x2<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
