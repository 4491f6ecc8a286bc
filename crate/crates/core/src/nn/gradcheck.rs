//! Finite-difference helpers for the layer unit tests.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Tensor4;

pub const EPS: f64 = 1e-5;
/// Denominator floor for relative errors of near-zero gradients.
pub const REL_FLOOR: f64 = 1e-3;

pub fn random_tensor(dims: [usize; 4], rng: &mut impl Rng) -> Tensor4<f64> {
    Tensor4::from_fn(dims, |_| rng.sample(StandardNormal))
}

/// Central differences of `f` around `values`.
pub fn numeric_grad(values: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = values.to_vec();
    (0..v.len())
        .map(|i| {
            let orig = v[i];
            v[i] = orig + EPS;
            let up = f(&v);
            v[i] = orig - EPS;
            let down = f(&v);
            v[i] = orig;
            (up - down) / (2.0 * EPS)
        })
        .collect()
}

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Passes when every pair is within `abs_tol` or within `rel_tol` relative error.
pub fn assert_close(analytic: &[f64], reference: &[f64], abs_tol: f64, rel_tol: f64) {
    assert_eq!(analytic.len(), reference.len());
    for (i, (&a, &b)) in analytic.iter().zip(reference).enumerate() {
        let ok = (a - b).abs() <= abs_tol || rel_error(a, b) < rel_tol;
        assert!(ok, "element {i}: {a} vs {b} (rel {})", rel_error(a, b));
    }
}
