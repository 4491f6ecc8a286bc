//! Raw RF frames, analytic-signal envelope detection and B-mode formation.

mod bmode;
mod container;
mod hilbert;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use bmode::{log_compress, BModeImage, DEFAULT_DYNAMIC_RANGE_DB};
pub use container::{read_rf, read_rf_from, write_rf, write_rf_to, SampleType, RF_MAGIC};
pub use hilbert::{analytic_signal, envelope, HilbertPlan};

/// Speed of sound in soft tissue, m/s.
pub const DEFAULT_SOUND_SPEED: f64 = 1540.0;

/// Beamformed RF scanlines, `samples[[line, axial]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame<T> {
    samples: Array2<T>,
    /// Sampling rate, Hz.
    pub fs: f64,
    /// Transducer center frequency, Hz.
    pub f0: f64,
    /// Lateral distance between scanlines, m.
    pub line_pitch: Option<f64>,
    /// m/s
    pub sound_speed: f64,
}

impl<T: Scalar> RfFrame<T> {
    pub fn new(samples: Array2<T>, fs: f64, f0: f64) -> Result<Self> {
        let frame = Self {
            samples,
            fs,
            f0,
            line_pitch: None,
            sound_speed: DEFAULT_SOUND_SPEED,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn with_line_pitch(mut self, pitch: f64) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::Parameter(format!("line pitch must be positive, got {pitch}")));
        }
        self.line_pitch = Some(pitch);
        Ok(self)
    }

    pub fn with_sound_speed(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Parameter(format!("sound speed must be positive, got {c}")));
        }
        self.sound_speed = c;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let (lines, axial) = self.samples.dim();
        if lines < 1 || axial < 2 {
            return Err(Error::Size(format!(
                "RF frame needs >= 1 line and >= 2 axial samples, got {lines}x{axial}"
            )));
        }
        if !(self.f0.is_finite() && self.f0 > 0.0 && self.fs.is_finite() && self.fs > 2.0 * self.f0) {
            return Err(Error::Parameter(format!(
                "sampling rate {} Hz does not exceed twice the center frequency {} Hz",
                self.fs, self.f0
            )));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("RF frame contains non-finite samples".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> &Array2<T> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<T> {
        self.samples
    }

    pub fn n_lines(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_axial(&self) -> usize {
        self.samples.ncols()
    }

    /// Acoustic wavelength at the center frequency, m.
    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.f0
    }

    /// Depth increment per axial sample (pulse-echo), m.
    pub fn axial_spacing(&self) -> f64 {
        self.sound_speed / (2.0 * self.fs)
    }
}

/// Nonnegative echo amplitude, laid out like the source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFrame<T> {
    amplitude: Array2<T>,
}

impl<T: Scalar> EnvelopeFrame<T> {
    pub fn new(amplitude: Array2<T>) -> Result<Self> {
        if amplitude.is_empty() {
            return Err(Error::Size("envelope frame is empty".into()));
        }
        if amplitude.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidInput(
                "envelope values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { amplitude })
    }

    pub fn amplitude(&self) -> &Array2<T> {
        &self.amplitude
    }

    pub fn into_amplitude(self) -> Array2<T> {
        self.amplitude
    }

    pub fn dim(&self) -> (usize, usize) {
        self.amplitude.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_bad_geometry_and_values() {
        assert!(matches!(
            RfFrame::new(Array2::<f64>::zeros((1, 1)), 40e6, 9e6),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            RfFrame::new(Array2::<f64>::zeros((2, 8)), 10e6, 9e6),
            Err(Error::Parameter(_))
        ));
        let mut s = Array2::<f64>::zeros((2, 8));
        s[[1, 3]] = f64::NAN;
        assert!(matches!(RfFrame::new(s, 40e6, 9e6), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn wavelength_and_spacing() {
        let f = RfFrame::new(Array2::<f64>::zeros((1, 4)), 40e6, 9e6).unwrap();
        assert!((f.wavelength() - 171.111e-6).abs() < 1e-9);
        assert!((f.axial_spacing() - 19.25e-6).abs() < 1e-12);
    }

    #[test]
    fn envelope_rejects_negative() {
        let a = ndarray::arr2(&[[0.0, -1.0]]);
        assert!(EnvelopeFrame::new(a).is_err());
    }
}
