use super::Tensor4;
use crate::error::{Error, Result};
use crate::raster::{bilinear_taps, Tap};
use crate::scalar::Scalar;

/// Bilinear resampling of every plane to `(oh, ow)` on the half-pixel grid.
pub fn upsample_bilinear<T: Scalar>(x: &Tensor4<T>, oh: usize, ow: usize) -> Result<Tensor4<T>> {
    let [n, c, h, w] = x.dims();
    if h == 0 || w == 0 || oh == 0 || ow == 0 {
        return Err(Error::Shape("bilinear upsampling with an empty dimension".into()));
    }
    let rows = bilinear_taps::<T>(h, oh);
    let cols = bilinear_taps::<T>(w, ow);
    let mut y = Tensor4::zeros([n, c, oh, ow]);
    for s in 0..n {
        for ch in 0..c {
            let src = x.plane(s, ch);
            let dst = y.plane_mut(s, ch);
            for (i, r) in rows.iter().enumerate() {
                let (a, b) = (&src[r.lo * w..(r.lo + 1) * w], &src[r.hi * w..(r.hi + 1) * w]);
                for (j, q) in cols.iter().enumerate() {
                    let top = a[q.lo] * (T::one() - q.frac) + a[q.hi] * q.frac;
                    let bot = b[q.lo] * (T::one() - q.frac) + b[q.hi] * q.frac;
                    dst[i * ow + j] = top * (T::one() - r.frac) + bot * r.frac;
                }
            }
        }
    }
    Ok(y)
}

/// Adjoint of [`upsample_bilinear`]: scatters output gradients back onto the
/// source grid with the same weights.
pub fn upsample_bilinear_backward<T: Scalar>(input_dims: [usize; 4], dy: &Tensor4<T>) -> Result<Tensor4<T>> {
    let [n, c, h, w] = input_dims;
    let [dn, dc, oh, ow] = dy.dims();
    if dn != n || dc != c {
        return Err(Error::Shape("upsampling gradient batch/channels mismatch".into()));
    }
    let rows: Vec<Tap<T>> = bilinear_taps(h, oh);
    let cols: Vec<Tap<T>> = bilinear_taps(w, ow);
    let mut dx = Tensor4::zeros(input_dims);
    for s in 0..n {
        for ch in 0..c {
            let g = dy.plane(s, ch);
            let dst = dx.plane_mut(s, ch);
            for (i, r) in rows.iter().enumerate() {
                let (wr_lo, wr_hi) = (T::one() - r.frac, r.frac);
                for (j, q) in cols.iter().enumerate() {
                    let v = g[i * ow + j];
                    let (wc_lo, wc_hi) = (T::one() - q.frac, q.frac);
                    dst[r.lo * w + q.lo] = dst[r.lo * w + q.lo] + v * wr_lo * wc_lo;
                    dst[r.lo * w + q.hi] = dst[r.lo * w + q.hi] + v * wr_lo * wc_hi;
                    dst[r.hi * w + q.lo] = dst[r.hi * w + q.lo] + v * wr_hi * wc_lo;
                    dst[r.hi * w + q.hi] = dst[r.hi * w + q.hi] + v * wr_hi * wc_hi;
                }
            }
        }
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::random_tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_raster_resize() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor([1, 1, 3, 4], &mut rng);
        let y = upsample_bilinear(&x, 6, 8).unwrap();
        let r = crate::raster::resize_bilinear(&x.to_raster(0, 0), 6, 8).unwrap();
        for (a, b) in y.data().iter().zip(r.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_stays_constant() {
        let x = Tensor4::full([2, 2, 2, 3], 0.7f64);
        let y = upsample_bilinear(&x, 4, 6).unwrap();
        assert!(y.data().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn backward_is_adjoint() {
        // <U x, r> == <x, U^T r>
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor([2, 3, 4, 5], &mut rng);
        let r = random_tensor([2, 3, 8, 10], &mut rng);
        let ux = upsample_bilinear(&x, 8, 10).unwrap();
        let utr = upsample_bilinear_backward(x.dims(), &r).unwrap();
        let lhs: f64 = ux.data().iter().zip(r.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(utr.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
