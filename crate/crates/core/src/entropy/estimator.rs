use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Histogram estimator of differential entropy, reusable across windows.
///
/// Samples are binned into `n_bins` equal-width bins spanning `[min, max]`.
/// With bin width `Δ` and density `f_i = count_i / (N·Δ)` the estimate is
/// `−Σ f_i·ln(f_i)·Δ`, in nats, which equals the plug-in Shannon entropy of
/// the bin probabilities plus `ln Δ`.
#[derive(Debug, Clone)]
pub struct EntropyEstimator {
    counts: Vec<u32>,
}

impl EntropyEstimator {
    pub fn new(n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::Parameter(format!("entropy needs >= 2 bins, got {n_bins}")));
        }
        Ok(Self {
            counts: vec![0; n_bins],
        })
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn estimate<T: Scalar>(&mut self, samples: &[T]) -> Result<T> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Size(format!("entropy needs >= 2 samples, got {n}")));
        }
        let (mut lo, mut hi) = (samples[0], samples[0]);
        for &v in samples {
            if !v.is_finite() {
                return Err(Error::InvalidInput("non-finite sample in entropy window".into()));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let range = hi - lo;
        if !(range > T::zero()) {
            return Err(Error::Degenerate("all samples in the window are equal".into()));
        }

        let bins = self.counts.len();
        let nb = T::of_usize(bins);
        self.counts.fill(0);
        for &v in samples {
            let idx = (((v - lo) / range) * nb).to_usize().unwrap_or(0).min(bins - 1);
            self.counts[idx] += 1;
        }

        let total = T::of_usize(n);
        let plug_in: T = self
            .counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = T::of(c as f64) / total;
                -p * p.ln()
            })
            .sum();
        Ok(plug_in + (range / nb).ln())
    }
}

/// Differential entropy (nats) of `samples` from an `n_bins` histogram.
pub fn estimate_entropy<T: Scalar>(samples: &[T], n_bins: usize) -> Result<T> {
    EntropyEstimator::new(n_bins)?.estimate(samples)
}
