//! 2-D raster utilities: resampling, orientation, mirroring.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Linear interpolation taps for one output coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap<T> {
    pub lo: usize,
    pub hi: usize,
    pub frac: T,
}

/// Half-pixel-center sampling positions mapping `input` samples onto `output`.
///
/// Output index `o` samples input coordinate `(o + 0.5)·input/output − 0.5`,
/// clamped to the valid range.
pub fn bilinear_taps<T: Scalar>(input: usize, output: usize) -> Vec<Tap<T>> {
    let scale = input as f64 / output as f64;
    let last = (input - 1) as f64;
    (0..output)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(input - 1);
            Tap {
                lo,
                hi,
                frac: T::of(src - lo as f64),
            }
        })
        .collect()
}

#[inline]
fn lerp<T: Scalar>(a: T, b: T, f: T) -> T {
    a + (b - a) * f
}

/// Bilinear resampling with half-pixel centers (corners not aligned).
pub fn resize_bilinear<T: Scalar>(raster: &Array2<T>, out_h: usize, out_w: usize) -> Result<Array2<T>> {
    let (in_h, in_w) = raster.dim();
    if in_h == 0 || in_w == 0 {
        return Err(Error::Size("cannot resize an empty raster".into()));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::Size(format!("output size {out_h}x{out_w} is empty")));
    }
    let rows = bilinear_taps::<T>(in_h, out_h);
    let cols = bilinear_taps::<T>(in_w, out_w);
    Ok(Array2::from_shape_fn((out_h, out_w), |(y, x)| {
        let (r, c) = (rows[y], cols[x]);
        let (a, b) = (raster[[r.lo, c.lo]], raster[[r.lo, c.hi]]);
        let (d, e) = (raster[[r.hi, c.lo]], raster[[r.hi, c.hi]]);
        let v = lerp(lerp(a, b, c.frac), lerp(d, e, c.frac), r.frac);
        let lo = a.min(b).min(d).min(e);
        let hi = a.max(b).max(d).max(e);
        v.max(lo).min(hi)
    }))
}

/// Nearest-neighbour resampling on the same half-pixel grid; used for masks.
pub fn resize_nearest<P: Copy>(raster: &Array2<P>, out_h: usize, out_w: usize) -> Result<Array2<P>> {
    let (in_h, in_w) = raster.dim();
    if in_h == 0 || in_w == 0 || out_h == 0 || out_w == 0 {
        return Err(Error::Size("nearest resize with an empty dimension".into()));
    }
    let pick = |o: usize, input: usize, output: usize| {
        (((o as f64 + 0.5) * input as f64 / output as f64).floor() as usize).min(input - 1)
    };
    Ok(Array2::from_shape_fn((out_h, out_w), |(y, x)| {
        raster[[pick(y, in_h, out_h), pick(x, in_w, out_w)]]
    }))
}

/// Mirrors columns (left-right flip).
pub fn hflip<P: Clone>(raster: &Array2<P>) -> Array2<P> {
    let w = raster.ncols();
    Array2::from_shape_fn(raster.dim(), |(y, x)| raster[[y, w - 1 - x]].clone())
}

/// Converts frame layout `[line, axial]` to display layout `[axial, line]`
/// (depth down the rows, lateral position across the columns).
pub fn to_display<P: Clone>(frame_layout: &Array2<P>) -> Array2<P> {
    frame_layout.t().to_owned()
}

/// Linear min-max normalization to `[0, 1]`; a constant raster maps to zeros.
pub fn normalize_min_max<T: Scalar>(raster: &Array2<T>) -> Array2<T> {
    let (lo, hi) = raster
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if !(span > T::zero()) {
        return Array2::zeros(raster.dim());
    }
    raster.mapv(|v| (v - lo) / span)
}
