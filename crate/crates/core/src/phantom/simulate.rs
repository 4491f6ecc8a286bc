use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rf::RfFrame;
use crate::scalar::Scalar;

/// Fractional −6 dB bandwidth of the transmit pulse.
pub const FRACTIONAL_BANDWIDTH: f64 = 0.6;

/// Elliptical inclusion in sample (axial) and scanline (lateral) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center_axial: f64,
    pub center_lateral: f64,
    pub radius_axial: f64,
    pub radius_lateral: f64,
}

impl Ellipse {
    #[inline]
    pub fn contains(&self, axial: f64, lateral: f64) -> bool {
        let a = (axial - self.center_axial) / self.radius_axial;
        let l = (lateral - self.center_lateral) / self.radius_lateral;
        a * a + l * l <= 1.0
    }

    pub fn area(&self) -> f64 {
        PI * self.radius_axial * self.radius_lateral
    }

    /// Ramanujan's approximation.
    pub fn perimeter(&self) -> f64 {
        let (a, b) = (self.radius_axial, self.radius_lateral);
        let h = ((a - b) / (a + b)).powi(2);
        PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub n_lines: usize,
    pub n_axial: usize,
    pub fs: f64,
    pub f0: f64,
    /// Scatterers per resolution cell outside the inclusion.
    pub scatterer_density_bg: f64,
    /// Scatterers per resolution cell inside the inclusion.
    pub scatterer_density_inc: f64,
    pub amplitude_ratio_inc: f64,
    pub inclusion: Option<Ellipse>,
    pub rng_seed: u64,
    /// Global multiplier on every scatterer amplitude.
    #[serde(default = "one")]
    pub amplitude_scale: f64,
    /// Smooths across neighbouring scanlines with a (1/4, 1/2, 1/4) kernel.
    #[serde(default)]
    pub lateral_blur: bool,
}

fn one() -> f64 {
    1.0
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            n_lines: 64,
            n_axial: 512,
            fs: 40e6,
            f0: 9e6,
            scatterer_density_bg: 10.0,
            scatterer_density_inc: 10.0,
            amplitude_ratio_inc: 1.0,
            inclusion: None,
            rng_seed: 0,
            amplitude_scale: 1.0,
            lateral_blur: false,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_lines < 1 || self.n_axial < 2 {
            return Err(Error::Size(format!(
                "phantom needs >= 1 line and >= 2 samples, got {}x{}",
                self.n_lines, self.n_axial
            )));
        }
        if !(self.f0 > 0.0 && self.fs > 2.0 * self.f0) {
            return Err(Error::Parameter(format!(
                "fs = {} Hz must exceed 2 * f0 = {} Hz",
                self.fs,
                2.0 * self.f0
            )));
        }
        for (name, v) in [
            ("scatterer_density_bg", self.scatterer_density_bg),
            ("scatterer_density_inc", self.scatterer_density_inc),
            ("amplitude_ratio_inc", self.amplitude_ratio_inc),
            ("amplitude_scale", self.amplitude_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if let Some(e) = &self.inclusion {
            let inside = e.radius_axial > 0.0
                && e.radius_lateral > 0.0
                && e.center_axial - e.radius_axial >= 0.0
                && e.center_axial + e.radius_axial <= (self.n_axial - 1) as f64
                && e.center_lateral - e.radius_lateral >= 0.0
                && e.center_lateral + e.radius_lateral <= (self.n_lines - 1) as f64;
            if !inside {
                return Err(Error::Geometry(format!(
                    "inclusion {e:?} does not fit in a {}x{} frame",
                    self.n_lines, self.n_axial
                )));
            }
        }
        Ok(())
    }

    pub fn pulse(&self) -> Pulse {
        Pulse::new(self.fs, self.f0, FRACTIONAL_BANDWIDTH)
    }

    /// `mask[[line, axial]]`, 1 inside the inclusion.
    pub fn truth_mask(&self) -> Array2<u8> {
        match &self.inclusion {
            None => Array2::zeros((self.n_lines, self.n_axial)),
            Some(e) => Array2::from_shape_fn((self.n_lines, self.n_axial), |(l, a)| {
                e.contains(a as f64, l as f64) as u8
            }),
        }
    }
}

/// Gaussian-modulated sinusoid sampled in units of RF samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    /// Standard deviation of the Gaussian envelope, in samples.
    pub sigma: f64,
    /// Carrier cycles per sample.
    pub carrier: f64,
}

impl Pulse {
    pub fn new(fs: f64, f0: f64, fractional_bandwidth: f64) -> Self {
        // Full −6 dB width of a Gaussian spectrum is 2·σ_f·sqrt(2 ln 2).
        let sigma_f = fractional_bandwidth * f0 / (2.0 * (2.0 * 2f64.ln()).sqrt());
        let sigma_t = 1.0 / (2.0 * PI * sigma_f);
        Self {
            sigma: sigma_t * fs,
            carrier: f0 / fs,
        }
    }

    /// Truncation half-width, 3σ.
    pub fn half_support(&self) -> f64 {
        3.0 * self.sigma
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        (-t * t / (2.0 * self.sigma * self.sigma)).exp() * (2.0 * PI * self.carrier * t).cos()
    }

    /// −6 dB duration of the envelope, in samples; one resolution cell spans
    /// this many samples on one scanline.
    pub fn resolution_cell(&self) -> f64 {
        2.0 * self.sigma * (2.0 * 2f64.ln()).sqrt()
    }
}

/// RF frame paired with its ground-truth inclusion mask (`[line, axial]`).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame<T> {
    pub rf: RfFrame<T>,
    pub truth_mask: Array2<u8>,
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Parameter(format!("poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

/// Point-scatterer simulation convolved line-by-line with the transmit pulse.
pub fn simulate<T: Scalar>(spec: &PhantomSpec) -> Result<LabeledFrame<T>> {
    spec.validate()?;
    let pulse = spec.pulse();
    let cell = pulse.resolution_cell();
    let half = pulse.half_support();
    let n_axial = spec.n_axial;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let mut rf = Array2::<f64>::zeros((spec.n_lines, n_axial));
    let mut scatterers: Vec<(f64, f64)> = Vec::new();
    for line in 0..spec.n_lines {
        scatterers.clear();
        let lateral = line as f64;
        let regions = [
            (spec.scatterer_density_bg, false, 1.0),
            (spec.scatterer_density_inc, true, spec.amplitude_ratio_inc),
        ];
        for (density, in_inclusion, ratio) in regions {
            let count = poisson_count(&mut rng, density / cell * n_axial as f64)?;
            for _ in 0..count {
                let z = rng.random::<f64>() * n_axial as f64;
                let amp: f64 = rng.sample(StandardNormal);
                let inside = spec.inclusion.is_some_and(|e| e.contains(z, lateral));
                if inside == in_inclusion {
                    scatterers.push((z, amp * ratio * spec.amplitude_scale));
                }
            }
        }
        let row = rf.row_mut(line);
        let row = row.into_slice().expect("rows are contiguous");
        for &(z, a) in &scatterers {
            let k0 = (z - half).ceil().max(0.0) as usize;
            let k1 = ((z + half).floor() as usize).min(n_axial - 1);
            for (k, out) in row.iter_mut().enumerate().take(k1 + 1).skip(k0) {
                *out += a * pulse.at(k as f64 - z);
            }
        }
    }

    if spec.lateral_blur && spec.n_lines > 1 {
        let src = rf.clone();
        let last = spec.n_lines - 1;
        for l in 0..spec.n_lines {
            let (lo, hi) = (l.saturating_sub(1), (l + 1).min(last));
            for a in 0..n_axial {
                rf[[l, a]] = 0.25 * src[[lo, a]] + 0.5 * src[[l, a]] + 0.25 * src[[hi, a]];
            }
        }
    }

    let frame = RfFrame::new(rf.mapv(T::of), spec.fs, spec.f0)?;
    Ok(LabeledFrame {
        rf: frame,
        truth_mask: spec.truth_mask(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_inclusion() -> PhantomSpec {
        PhantomSpec {
            n_lines: 32,
            n_axial: 256,
            inclusion: Some(Ellipse {
                center_axial: 128.0,
                center_lateral: 16.0,
                radius_axial: 60.0,
                radius_lateral: 9.0,
            }),
            rng_seed: 11,
            ..PhantomSpec::default()
        }
    }

    #[test]
    fn no_scatterers_no_echo() {
        let spec = PhantomSpec {
            scatterer_density_bg: 0.0,
            scatterer_density_inc: 0.0,
            ..with_inclusion()
        };
        let f = simulate::<f64>(&spec).unwrap();
        assert!(f.rf.samples().iter().all(|&v| v == 0.0));
        assert!(f.truth_mask.iter().any(|&m| m == 1));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate::<f64>(&with_inclusion()).unwrap();
        let b = simulate::<f64>(&with_inclusion()).unwrap();
        assert_eq!(a, b);
        let c = simulate::<f64>(&PhantomSpec {
            rng_seed: 12,
            ..with_inclusion()
        })
        .unwrap();
        assert_ne!(a.rf, c.rf);
    }

    #[test]
    fn inclusion_must_fit() {
        let mut spec = with_inclusion();
        spec.inclusion.as_mut().unwrap().radius_lateral = 20.0;
        assert!(matches!(simulate::<f64>(&spec), Err(Error::Geometry(_))));
    }

    #[test]
    fn pulse_geometry_at_nominal_frequencies() {
        let p = Pulse::new(40e6, 9e6, 0.6);
        // sigma_f = 5.4 MHz / 2.3548 = 2.293 MHz; sigma_t = 69.4 ns = 2.776 samples.
        assert!((p.sigma - 2.776).abs() < 1e-3, "{}", p.sigma);
        assert!((p.resolution_cell() - 6.537).abs() < 1e-3);
        assert_eq!(p.at(0.0), 1.0);
        // −6 dB point of the envelope.
        let t = p.resolution_cell() / 2.0;
        assert!(((-t * t / (2.0 * p.sigma * p.sigma)).exp() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn blur_is_optional_and_smooths() {
        let plain = simulate::<f64>(&with_inclusion()).unwrap();
        let blurred = simulate::<f64>(&PhantomSpec {
            lateral_blur: true,
            ..with_inclusion()
        })
        .unwrap();
        let energy = |f: &LabeledFrame<f64>| f.rf.samples().iter().map(|v| v * v).sum::<f64>();
        assert!(energy(&blurred) < energy(&plain));
    }
}
