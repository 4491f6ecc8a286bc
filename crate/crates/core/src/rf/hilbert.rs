use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{EnvelopeFrame, RfFrame};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// FFT plans for computing analytic signals of a fixed length.
///
/// The discrete analytic signal keeps DC (and Nyquist, for even lengths) at
/// unit weight, doubles positive frequencies and zeroes negative ones.
pub struct HilbertPlan<T: Scalar> {
    len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> HilbertPlan<T> {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Size(format!("analytic signal needs >= 2 samples, got {len}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Writes `x + i·H[x]` into `out`, which must have the plan's length.
    pub fn apply(&self, line: &[T], out: &mut [Complex<T>]) -> Result<()> {
        if line.len() != self.len || out.len() != self.len {
            return Err(Error::Size(format!(
                "plan length {} does not match input {} / output {}",
                self.len,
                line.len(),
                out.len()
            )));
        }
        if line.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("analytic signal input is not finite".into()));
        }
        for (o, &x) in out.iter_mut().zip(line) {
            *o = Complex::new(x, T::zero());
        }
        self.forward.process(out);

        let n = self.len;
        let two = T::of(2.0);
        // Bins 1..ceil(n/2) are strictly positive frequencies; bin n/2 is
        // Nyquist for even n and stays at unit weight.
        let half = n.div_ceil(2);
        for bin in out.iter_mut().take(half).skip(1) {
            *bin = *bin * two;
        }
        let first_negative = n / 2 + 1;
        for bin in out.iter_mut().skip(first_negative) {
            *bin = Complex::new(T::zero(), T::zero());
        }

        self.inverse.process(out);
        let scale = T::one() / T::of_usize(n);
        for o in out.iter_mut() {
            *o = *o * scale;
        }
        Ok(())
    }
}

/// Analytic signal of one real scanline via the one-sided spectrum.
pub fn analytic_signal<T: Scalar>(line: &[T]) -> Result<Vec<Complex<T>>> {
    let plan = HilbertPlan::new(line.len())?;
    let mut out = vec![Complex::new(T::zero(), T::zero()); line.len()];
    plan.apply(line, &mut out)?;
    Ok(out)
}

/// Per-scanline magnitude of the analytic signal.
pub fn envelope<T: Scalar>(frame: &RfFrame<T>) -> Result<EnvelopeFrame<T>> {
    let plan = HilbertPlan::new(frame.n_axial())?;
    let mut amplitude = Array2::<T>::zeros(frame.samples().dim());
    amplitude
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(frame.samples().axis_iter(Axis(0)).into_par_iter())
        .try_for_each_init(
            || vec![Complex::new(T::zero(), T::zero()); plan.len()],
            |buf, (mut dst, src)| -> Result<()> {
                let line: Vec<T> = src.iter().copied().collect();
                plan.apply(&line, buf)?;
                for (d, c) in dst.iter_mut().zip(buf.iter()) {
                    *d = c.norm();
                }
                Ok(())
            },
        )?;
    EnvelopeFrame::new(amplitude)
}
