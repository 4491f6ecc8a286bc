use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense NCHW tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    data: Vec<T>,
    dims: [usize; 4],
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            data: vec![T::zero(); dims.iter().product()],
            dims,
        }
    }

    pub fn full(dims: [usize; 4], v: T) -> Self {
        Self {
            data: vec![v; dims.iter().product()],
            dims,
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<T>) -> Result<Self> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {:?} tensor",
                data.len(),
                dims
            )));
        }
        Ok(Self { data, dims })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut([usize; 4]) -> T) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for n in 0..dims[0] {
            for c in 0..dims[1] {
                for y in 0..dims[2] {
                    for x in 0..dims[3] {
                        data.push(f([n, c, y, x]));
                    }
                }
            }
        }
        Self { data, dims }
    }

    /// Stacks single-channel rasters of equal size into `[N, 1, H, W]`.
    pub fn stack(rasters: &[&Array2<T>]) -> Result<Self> {
        let first = rasters
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero rasters".into()))?;
        let (h, w) = first.dim();
        let mut data = Vec::with_capacity(rasters.len() * h * w);
        for r in rasters {
            if r.dim() != (h, w) {
                return Err(Error::Shape(format!("raster {:?} differs from {:?}", r.dim(), (h, w))));
            }
            data.extend(r.iter().copied());
        }
        Self::from_vec([rasters.len(), 1, h, w], data)
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn n(&self) -> usize {
        self.dims[0]
    }

    pub fn c(&self) -> usize {
        self.dims[1]
    }

    pub fn h(&self) -> usize {
        self.dims[2]
    }

    pub fn w(&self) -> usize {
        self.dims[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, [n, c, y, x]: [usize; 4]) -> usize {
        ((n * self.dims[1] + c) * self.dims[2] + y) * self.dims[3] + x
    }

    #[inline]
    pub fn at(&self, i: [usize; 4]) -> T {
        self.data[self.index(i)]
    }

    #[inline]
    pub fn set(&mut self, i: [usize; 4], v: T) {
        let k = self.index(i);
        self.data[k] = v;
    }

    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let hw = self.dims[2] * self.dims[3];
        let start = (n * self.dims[1] + c) * hw;
        &self.data[start..start + hw]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [T] {
        let hw = self.dims[2] * self.dims[3];
        let start = (n * self.dims[1] + c) * hw;
        &mut self.data[start..start + hw]
    }

    /// Channel `c` of sample `n` as a raster.
    pub fn to_raster(&self, n: usize, c: usize) -> Array2<T> {
        Array2::from_shape_vec((self.dims[2], self.dims[3]), self.plane(n, c).to_vec())
            .expect("plane matches its dims")
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            dims: self.dims,
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.expect_dims(other.dims, "elementwise operand")?;
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            dims: self.dims,
        })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.expect_dims(other.dims, "accumulated gradient")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn expect_dims(&self, dims: [usize; 4], what: &str) -> Result<()> {
        if self.dims != dims {
            return Err(Error::Shape(format!("{what}: expected {:?}, got {:?}", dims, self.dims)));
        }
        Ok(())
    }

    /// Concatenates along channels: `[N, Ca+Cb, H, W]`.
    pub fn concat_channels(a: &Self, b: &Self) -> Result<Self> {
        let [n, ca, h, w] = a.dims;
        let [nb, cb, hb, wb] = b.dims;
        if (n, h, w) != (nb, hb, wb) {
            return Err(Error::Shape(format!("cannot concatenate {:?} with {:?}", a.dims, b.dims)));
        }
        let hw = h * w;
        let mut data = Vec::with_capacity(a.len() + b.len());
        for i in 0..n {
            data.extend_from_slice(&a.data[i * ca * hw..(i + 1) * ca * hw]);
            data.extend_from_slice(&b.data[i * cb * hw..(i + 1) * cb * hw]);
        }
        Self::from_vec([n, ca + cb, h, w], data)
    }

    /// Inverse of [`Tensor4::concat_channels`]: the first `ca` channels, then the rest.
    pub fn split_channels(&self, ca: usize) -> Result<(Self, Self)> {
        let [n, c, h, w] = self.dims;
        if ca > c {
            return Err(Error::Shape(format!("cannot split {ca} channels from {c}")));
        }
        let cb = c - ca;
        let hw = h * w;
        let mut a = Vec::with_capacity(n * ca * hw);
        let mut b = Vec::with_capacity(n * cb * hw);
        for i in 0..n {
            let base = i * c * hw;
            a.extend_from_slice(&self.data[base..base + ca * hw]);
            b.extend_from_slice(&self.data[base + ca * hw..base + c * hw]);
        }
        Ok((Self::from_vec([n, ca, h, w], a)?, Self::from_vec([n, cb, h, w], b)?))
    }

    /// Samples `indices` of the batch, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let per = self.dims[1] * self.dims[2] * self.dims[3];
        let mut data = Vec::with_capacity(indices.len() * per);
        for &i in indices {
            data.extend_from_slice(&self.data[i * per..(i + 1) * per]);
        }
        Self {
            data,
            dims: [indices.len(), self.dims[1], self.dims[2], self.dims[3]],
        }
    }

    /// Mirrors every plane left-right.
    pub fn hflip(&self) -> Self {
        let w = self.dims[3];
        Self::from_fn(self.dims, |[n, c, y, x]| self.at([n, c, y, w - 1 - x]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_split_round_trip() {
        let a = Tensor4::from_fn([2, 2, 2, 3], |[n, c, y, x]| (n * 100 + c * 10 + y * 3 + x) as f64);
        let b = Tensor4::from_fn([2, 1, 2, 3], |[n, _, y, x]| -((n * 7 + y * 3 + x) as f64));
        let ab = Tensor4::concat_channels(&a, &b).unwrap();
        assert_eq!(ab.dims(), [2, 3, 2, 3]);
        assert_eq!(ab.at([1, 2, 1, 2]), b.at([1, 0, 1, 2]));
        let (a2, b2) = ab.split_channels(2).unwrap();
        assert_eq!((a2, b2), (a, b));
    }

    #[test]
    fn shape_errors() {
        assert!(Tensor4::<f32>::from_vec([1, 1, 2, 2], vec![0.0; 3]).is_err());
        let a = Tensor4::<f32>::zeros([1, 1, 2, 2]);
        let b = Tensor4::<f32>::zeros([1, 1, 2, 3]);
        assert!(Tensor4::concat_channels(&a, &b).is_err());
    }
}
