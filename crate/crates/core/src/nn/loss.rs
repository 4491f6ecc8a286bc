use super::Tensor4;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DICE_SMOOTH: f64 = 1.0;

/// Row-by-row sum in which element `x` is first paired with `w − 1 − x`,
/// making the total bit-identical for a horizontally mirrored plane.
fn mirrored_sum<T: Scalar>(values: &[T], w: usize) -> T {
    let mut total = T::zero();
    for row in values.chunks_exact(w) {
        let mut acc = T::zero();
        for x in 0..w / 2 {
            acc = acc + (row[x] + row[w - 1 - x]);
        }
        if w % 2 == 1 {
            acc = acc + row[w / 2];
        }
        total = total + acc;
    }
    total
}

/// Soft Dice loss `1 − (2Σpt + ε)/(Σp + Σt + ε)` per sample, averaged over the
/// batch. Returns the loss and its gradient with respect to `pred`.
pub fn dice_loss<T: Scalar>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<(T, Tensor4<T>)> {
    if pred.dims() != target.dims() {
        return Err(Error::Shape(format!(
            "dice loss on {:?} vs {:?}",
            pred.dims(),
            target.dims()
        )));
    }
    let [n, c, h, w] = pred.dims();
    let per = c * h * w;
    let eps = T::of(DICE_SMOOTH);
    let nf = T::of_usize(n);
    let two = T::of(2.0);
    let mut grad = Tensor4::zeros(pred.dims());
    let mut total = T::zero();
    for s in 0..n {
        let p = &pred.data()[s * per..(s + 1) * per];
        let t = &target.data()[s * per..(s + 1) * per];
        let prod: Vec<T> = p.iter().zip(t).map(|(&a, &b)| a * b).collect();
        let inter = mirrored_sum(&prod, w);
        let sum = mirrored_sum(p, w) + mirrored_sum(t, w);
        let num = two * inter + eps;
        let den = sum + eps;
        total = total + T::one() - num / den;
        let g = &mut grad.data_mut()[s * per..(s + 1) * per];
        for (gi, &ti) in g.iter_mut().zip(t) {
            *gi = -(two * ti * den - num) / (den * den) / nf;
        }
    }
    Ok((total / nf, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{assert_close, numeric_grad};

    fn mask() -> Tensor4<f64> {
        Tensor4::from_fn([2, 1, 4, 4], |[n, _, y, x]| if (x + y + n) % 3 == 0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn perfect_overlap_is_near_zero() {
        let t = mask();
        let (l, _) = dice_loss(&t, &t).unwrap();
        assert!(l >= 0.0 && l < 0.01 + 1e-12, "{l}");
    }

    #[test]
    fn half_prediction_closed_form() {
        // 8 of 16 pixels set, p = 0.5: (2·4 + 1)/(8 + 8 + 1) = 9/17.
        let t = Tensor4::from_fn([1, 1, 4, 4], |[_, _, y, _]| if y < 2 { 1.0 } else { 0.0 });
        let p = Tensor4::full([1, 1, 4, 4], 0.5f64);
        let (l, _) = dice_loss(&p, &t).unwrap();
        assert!((l - (1.0 - 9.0 / 17.0)).abs() < 1e-9);
    }

    #[test]
    fn gradient_check() {
        let t = mask();
        let p = Tensor4::from_fn(t.dims(), |[n, _, y, x]| 0.1 + 0.05 * ((3 * y + x + n) % 16) as f64);
        let (_, g) = dice_loss(&p, &t).unwrap();
        let num = numeric_grad(p.data(), |v| {
            dice_loss(&Tensor4::from_vec(t.dims(), v.to_vec()).unwrap(), &t).unwrap().0
        });
        assert_close(g.data(), &num, 0.0, 1e-4);
    }

    #[test]
    fn mismatch_is_shape_error() {
        let a = Tensor4::<f64>::zeros([1, 1, 2, 2]);
        let b = Tensor4::<f64>::zeros([1, 1, 2, 4]);
        assert!(matches!(dice_loss(&a, &b), Err(Error::Shape(_))));
    }
}
