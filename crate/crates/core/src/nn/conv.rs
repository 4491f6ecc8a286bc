//! 2-D cross-correlation with zero padding.

use rand::Rng;

use super::{HasParams, Param, Tensor4};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Output columns `[lo, hi)` whose input column `ox·stride + kx − pad` is in range.
#[inline]
fn valid_range(k: usize, pad: usize, stride: usize, input: usize, output: usize) -> (usize, usize) {
    // ox·s + k − p >= 0  and  ox·s + k − p <= input − 1
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    let hi = if input + pad > k {
        ((input - 1 + pad - k) / stride + 1).min(output)
    } else {
        0
    };
    (lo, hi.max(lo))
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    n: usize,
    ic: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    pad: usize,
}

fn geometry<T: Scalar>(x: &Tensor4<T>, weight: &Tensor4<T>, stride: usize, pad: usize) -> Result<Geometry> {
    let [n, ic, h, w] = x.dims();
    let [oc, wic, kh, kw] = weight.dims();
    if wic != ic {
        return Err(Error::Shape(format!("conv expects {wic} input channels, got {ic}")));
    }
    if stride == 0 {
        return Err(Error::Shape("conv stride must be >= 1".into()));
    }
    if h + 2 * pad < kh || w + 2 * pad < kw {
        return Err(Error::Shape(format!(
            "{kh}x{kw} kernel does not fit a {h}x{w} input with padding {pad}"
        )));
    }
    Ok(Geometry {
        n,
        ic,
        h,
        w,
        oc,
        kh,
        kw,
        oh: (h + 2 * pad - kh) / stride + 1,
        ow: (w + 2 * pad - kw) / stride + 1,
        stride,
        pad,
    })
}

/// Visits every (output row, input row) pair for kernel row `ky`.
#[inline]
fn rows(g: &Geometry, ky: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..g.oh).filter_map(move |oy| {
        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
        (iy >= 0 && (iy as usize) < g.h).then_some((oy, iy as usize))
    })
}

/// `y[n,o] = b[o] + Σ_i w[o,i] ⋆ x[n,i]`, weights `[out, in, kh, kw]`.
pub fn conv2d_forward<T: Scalar>(
    x: &Tensor4<T>,
    weight: &Tensor4<T>,
    bias: &[T],
    stride: usize,
    pad: usize,
) -> Result<Tensor4<T>> {
    let g = geometry(x, weight, stride, pad)?;
    if bias.len() != g.oc {
        return Err(Error::Shape(format!("conv bias has {} entries for {} outputs", bias.len(), g.oc)));
    }
    let mut y = Tensor4::zeros([g.n, g.oc, g.oh, g.ow]);
    let wd = weight.data();
    for n in 0..g.n {
        for o in 0..g.oc {
            let out = y.plane_mut(n, o);
            out.fill(bias[o]);
            for i in 0..g.ic {
                let inp = x.plane(n, i);
                for ky in 0..g.kh {
                    for kx in 0..g.kw {
                        let wv = wd[((o * g.ic + i) * g.kh + ky) * g.kw + kx];
                        let (lo, hi) = valid_range(kx, g.pad, g.stride, g.w, g.ow);
                        if lo >= hi {
                            continue;
                        }
                        for (oy, iy) in rows(&g, ky) {
                            let orow = &mut out[oy * g.ow + lo..oy * g.ow + hi];
                            let ibase = iy * g.w + lo * g.stride + kx - g.pad;
                            if g.stride == 1 {
                                let irow = &inp[ibase..ibase + (hi - lo)];
                                for (o_, &i_) in orow.iter_mut().zip(irow) {
                                    *o_ = *o_ + wv * i_;
                                }
                            } else {
                                for (j, o_) in orow.iter_mut().enumerate() {
                                    *o_ = *o_ + wv * inp[ibase + j * g.stride];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(y)
}

/// Gradients of [`conv2d_forward`]: `(dx, dweight, dbias)`.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor4<T>,
    weight: &Tensor4<T>,
    dy: &Tensor4<T>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor4<T>, Tensor4<T>, Vec<T>)> {
    let g = geometry(x, weight, stride, pad)?;
    dy.expect_dims([g.n, g.oc, g.oh, g.ow], "conv output gradient")?;
    let mut dx = Tensor4::zeros(x.dims());
    let mut dw = Tensor4::zeros(weight.dims());
    let mut db = vec![T::zero(); g.oc];
    let wd = weight.data();
    for n in 0..g.n {
        for o in 0..g.oc {
            let gout = dy.plane(n, o);
            db[o] = db[o] + gout.iter().copied().sum::<T>();
            for i in 0..g.ic {
                let inp = x.plane(n, i);
                for ky in 0..g.kh {
                    for kx in 0..g.kw {
                        let widx = ((o * g.ic + i) * g.kh + ky) * g.kw + kx;
                        let wv = wd[widx];
                        let (lo, hi) = valid_range(kx, g.pad, g.stride, g.w, g.ow);
                        if lo >= hi {
                            continue;
                        }
                        let mut acc = T::zero();
                        let dxp = dx.plane_mut(n, i);
                        for (oy, iy) in rows(&g, ky) {
                            let grow = &gout[oy * g.ow + lo..oy * g.ow + hi];
                            let ibase = iy * g.w + lo * g.stride + kx - g.pad;
                            if g.stride == 1 {
                                let irow = &inp[ibase..ibase + (hi - lo)];
                                let drow = &mut dxp[ibase..ibase + (hi - lo)];
                                for ((d, &gv), &iv) in drow.iter_mut().zip(grow).zip(irow) {
                                    *d = *d + wv * gv;
                                    acc = acc + gv * iv;
                                }
                            } else {
                                for (j, &gv) in grow.iter().enumerate() {
                                    let k = ibase + j * g.stride;
                                    dxp[k] = dxp[k] + wv * gv;
                                    acc = acc + gv * inp[k];
                                }
                            }
                        }
                        let dwd = dw.data_mut();
                        dwd[widx] = dwd[widx] + acc;
                    }
                }
            }
        }
    }
    Ok((dx, dw, db))
}

/// Convolution layer owning its weights and the cached input of the last
/// forward pass.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    pub stride: usize,
    pub pad: usize,
    input: Option<Tensor4<T>>,
}

impl<T: Scalar> Conv2d<T> {
    /// He-initialized `k×k` convolution, zero bias.
    pub fn new(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        k: usize,
        stride: usize,
        pad: usize,
        rng: &mut impl Rng,
    ) -> Self {
        Self {
            weight: Param::he_normal(format!("{name}.weight"), &[out_ch, in_ch, k, k], in_ch * k * k, rng),
            bias: Param::zeros(format!("{name}.bias"), &[out_ch]),
            stride,
            pad,
            input: None,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }

    fn weight_tensor(&self) -> Tensor4<T> {
        let s = &self.weight.shape;
        Tensor4::from_vec([s[0], s[1], s[2], s[3]], self.weight.value.clone()).expect("weight shape")
    }

    pub fn forward(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let y = conv2d_forward(x, &self.weight_tensor(), &self.bias.value, self.stride, self.pad)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Tensor4<T>) -> Result<Tensor4<T>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Shape("conv backward called before forward".into()))?;
        let (dx, dw, db) = conv2d_backward(x, &self.weight_tensor(), dy, self.stride, self.pad)?;
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

impl<T: Scalar> HasParams<T> for Conv2d<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
