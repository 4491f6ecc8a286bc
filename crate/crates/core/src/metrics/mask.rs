use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary segmentation raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pixels: Array2<bool>,
}

impl Mask {
    pub fn new(pixels: Array2<bool>) -> Self {
        Self { pixels }
    }

    pub fn zeros(dim: (usize, usize)) -> Self {
        Self::new(Array2::from_elem(dim, false))
    }

    /// Accepts only 0/1 values.
    pub fn from_binary(values: &Array2<u8>) -> Result<Self> {
        if values.iter().any(|&v| v > 1) {
            return Err(Error::InvalidInput("mask values must be 0 or 1".into()));
        }
        Ok(Self::new(values.mapv(|v| v == 1)))
    }

    /// 8-bit image where values above 127 are foreground.
    pub fn from_gray8(values: &Array2<u8>) -> Self {
        Self::new(values.mapv(|v| v > 127))
    }

    pub fn pixels(&self) -> &Array2<bool> {
        &self.pixels
    }

    pub fn dim(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn to_binary(&self) -> Array2<u8> {
        self.pixels.mapv(u8::from)
    }

    pub fn to_gray8(&self) -> Array2<u8> {
        self.pixels.mapv(|p| if p { 255 } else { 0 })
    }

    /// `(row, col)` centroid of the foreground, `None` when empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let n = self.count();
        if n == 0 {
            return None;
        }
        let (mut r, mut c) = (0.0, 0.0);
        for ((y, x), &p) in self.pixels.indexed_iter() {
            if p {
                r += y as f64;
                c += x as f64;
            }
        }
        Some((r / n as f64, c / n as f64))
    }
}

/// Foreground where `value >= tau`.
pub fn threshold<T: Scalar>(pred: &Array2<T>, tau: f64) -> Result<Mask> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Parameter(format!("threshold must lie in [0, 1], got {tau}")));
    }
    let t = T::of(tau);
    Ok(Mask::new(pred.mapv(|v| v >= t)))
}
