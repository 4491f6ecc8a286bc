use ndarray::Array2;

use crate::raster::hflip;

/// Originals followed by their left-right mirrored copies; image and mask
/// of a pair are mirrored together.
pub fn augment_hflip<A: Clone, B: Clone>(pairs: &[(Array2<A>, Array2<B>)]) -> Vec<(Array2<A>, Array2<B>)> {
    let mut out = pairs.to_vec();
    out.extend(pairs.iter().map(|(img, mask)| (hflip(img), hflip(mask))));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Mask;

    #[test]
    fn doubles_and_mirrors_centroid() {
        let img = Array2::from_shape_fn((6, 10), |(y, x)| (y + x) as f32);
        let mut m = Array2::<u8>::zeros((6, 10));
        m[[1, 1]] = 1;
        m[[2, 2]] = 1;
        m[[2, 3]] = 1;
        let pairs = vec![(img.clone(), m.clone()); 10];
        let out = augment_hflip(&pairs);
        assert_eq!(out.len(), 20);
        let (_, flipped) = &out[10];
        let (r0, c0) = Mask::from_binary(&m).unwrap().centroid().unwrap();
        let (r1, c1) = Mask::from_binary(flipped).unwrap().centroid().unwrap();
        assert_eq!(r0, r1);
        assert!((c1 - (9.0 - c0)).abs() < 1e-12);
    }
}
