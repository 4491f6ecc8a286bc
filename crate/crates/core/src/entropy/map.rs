use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EntropyEstimator;
use crate::error::{Error, Result};
use crate::rf::{EnvelopeFrame, RfFrame};
use crate::scalar::Scalar;

/// Sliding-window geometry, in samples (axial) and scanlines (lateral).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub axial_samples: usize,
    pub lateral_lines: usize,
    pub stride_axial: usize,
    pub stride_lateral: usize,
    pub n_bins: usize,
}

impl Default for WindowSpec {
    /// 100 axial samples by 14 scanlines, dense stride, 64 bins.
    fn default() -> Self {
        Self {
            axial_samples: 100,
            lateral_lines: 14,
            stride_axial: 1,
            stride_lateral: 1,
            n_bins: 64,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("axial_samples", self.axial_samples),
            ("lateral_lines", self.lateral_lines),
            ("stride_axial", self.stride_axial),
            ("stride_lateral", self.stride_lateral),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::Parameter(format!("window {name} must be >= 1")));
            }
        }
        if self.n_bins < 2 {
            return Err(Error::Parameter(format!("entropy needs >= 2 bins, got {}", self.n_bins)));
        }
        Ok(())
    }

    /// True when a window holds fewer than two samples per bin on average.
    pub fn is_sparse(&self) -> bool {
        self.axial_samples * self.lateral_lines < 2 * self.n_bins
    }

    pub fn samples_per_window(&self) -> usize {
        self.axial_samples * self.lateral_lines
    }

    /// Map dimensions `(lateral positions, axial positions)` for a frame.
    pub fn map_dims(&self, n_lines: usize, n_axial: usize) -> Result<(usize, usize)> {
        self.validate()?;
        if self.lateral_lines > n_lines || self.axial_samples > n_axial {
            return Err(Error::Size(format!(
                "window {}x{} (axial x lateral) exceeds frame of {} axial samples x {} lines",
                self.axial_samples, self.lateral_lines, n_axial, n_lines
            )));
        }
        Ok((
            (n_lines - self.lateral_lines) / self.stride_lateral + 1,
            (n_axial - self.axial_samples) / self.stride_axial + 1,
        ))
    }
}

/// Entropy (nats) per window position, `values[[lateral_pos, axial_pos]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMap<T> {
    pub values: Array2<T>,
    pub window: WindowSpec,
    /// `(axial, lateral)` frame coordinate of the first window center.
    pub origin_offset: (f64, f64),
}

impl<T: Scalar> EntropyMap<T> {
    /// Resamples the map onto the full frame grid: every frame pixel takes the
    /// value of the nearest window center, edges replicate the outermost centers.
    pub fn place_on_frame(&self, n_lines: usize, n_axial: usize) -> Array2<T> {
        let (rows, cols) = self.values.dim();
        let nearest = |coord: usize, offset: f64, stride: usize, count: usize| -> usize {
            let k = ((coord as f64 - offset) / stride as f64).round();
            k.clamp(0.0, (count - 1) as f64) as usize
        };
        let lat: Vec<usize> = (0..n_lines)
            .map(|l| nearest(l, self.origin_offset.1, self.window.stride_lateral, rows))
            .collect();
        let ax: Vec<usize> = (0..n_axial)
            .map(|a| nearest(a, self.origin_offset.0, self.window.stride_axial, cols))
            .collect();
        Array2::from_shape_fn((n_lines, n_axial), |(l, a)| self.values[[lat[l], ax[a]]])
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::of_usize(self.values.len())
    }
}

/// Sliding-window entropy map of an envelope frame.
///
/// Windows whose amplitudes are all equal take the minimum entropy found over
/// the non-degenerate windows of the same map.
pub fn entropy_map<T: Scalar>(env: &EnvelopeFrame<T>, window: WindowSpec) -> Result<EntropyMap<T>> {
    let (n_lines, n_axial) = env.dim();
    let (rows, cols) = window.map_dims(n_lines, n_axial)?;
    let amp = env.amplitude();

    let per_row: Vec<Vec<Option<T>>> = (0..rows)
        .into_par_iter()
        .map(|r| -> Result<Vec<Option<T>>> {
            let mut est = EntropyEstimator::new(window.n_bins)?;
            let mut buf = Vec::with_capacity(window.samples_per_window());
            let l0 = r * window.stride_lateral;
            (0..cols)
                .map(|c| {
                    let a0 = c * window.stride_axial;
                    buf.clear();
                    let patch = amp.slice(s![l0..l0 + window.lateral_lines, a0..a0 + window.axial_samples]);
                    for line in patch.rows() {
                        buf.extend(line.iter().copied());
                    }
                    match est.estimate(&buf) {
                        Ok(v) => Ok(Some(v)),
                        Err(Error::Degenerate(_)) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let floor = per_row
        .iter()
        .flatten()
        .flatten()
        .copied()
        .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.min(v))))
        .ok_or_else(|| Error::Degenerate("every window has constant amplitude".into()))?;

    let values = Array2::from_shape_fn((rows, cols), |(r, c)| per_row[r][c].unwrap_or(floor));
    Ok(EntropyMap {
        values,
        window,
        origin_offset: (
            (window.axial_samples as f64 - 1.0) / 2.0,
            (window.lateral_lines as f64 - 1.0) / 2.0,
        ),
    })
}

/// Window spanning `n_wavelengths` acoustic wavelengths.
///
/// Axial extent uses the pulse-echo sample spacing `c/(2·fs)`. Lateral extent
/// comes from the frame's line pitch, or `lateral_lines` when the pitch is
/// unknown. Strides default to 1 and the bin count to 64.
pub fn window_from_wavelengths<T: Scalar>(
    n_wavelengths: f64,
    frame: &RfFrame<T>,
    lateral_lines: Option<usize>,
) -> Result<WindowSpec> {
    if !(n_wavelengths.is_finite() && n_wavelengths > 0.0) {
        return Err(Error::Parameter(format!(
            "window size in wavelengths must be positive, got {n_wavelengths}"
        )));
    }
    let extent = n_wavelengths * frame.wavelength();
    let axial = (extent / frame.axial_spacing()).round().max(1.0) as usize;
    let lateral = match (frame.line_pitch, lateral_lines) {
        (Some(pitch), _) => (extent / pitch).round().max(1.0) as usize,
        (None, Some(n)) if n >= 1 => n,
        _ => {
            return Err(Error::Parameter(
                "frame has no line pitch and no lateral window size was given".into(),
            ))
        }
    };
    Ok(WindowSpec {
        axial_samples: axial,
        lateral_lines: lateral,
        ..WindowSpec::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::estimate_entropy;

    fn ramp_env(lines: usize, axial: usize) -> EnvelopeFrame<f64> {
        EnvelopeFrame::new(Array2::from_shape_fn((lines, axial), |(l, a)| {
            ((l * 37 + a * 11) % 29) as f64 * 0.1 + 0.05
        }))
        .unwrap()
    }

    #[test]
    fn single_window_frame() {
        let env = ramp_env(14, 100);
        let m = entropy_map(&env, WindowSpec::default()).unwrap();
        assert_eq!(m.values.dim(), (1, 1));
        let all: Vec<f64> = env.amplitude().iter().copied().collect();
        assert_eq!(m.values[[0, 0]], estimate_entropy(&all, 64).unwrap());
    }

    #[test]
    fn window_larger_than_frame() {
        let env = ramp_env(256, 100);
        let w = WindowSpec {
            axial_samples: 200,
            ..WindowSpec::default()
        };
        assert!(matches!(entropy_map(&env, w), Err(Error::Size(_))));
    }

    #[test]
    fn degenerate_windows_take_the_map_minimum() {
        let mut a = Array2::from_shape_fn((2, 12), |(l, x)| ((l * 5 + x * 3) % 7) as f64);
        for x in 0..4 {
            a[[0, x]] = 2.0;
            a[[1, x]] = 2.0;
        }
        let env = EnvelopeFrame::new(a).unwrap();
        let w = WindowSpec {
            axial_samples: 4,
            lateral_lines: 2,
            stride_axial: 4,
            stride_lateral: 1,
            n_bins: 2,
        };
        let m = entropy_map(&env, w).unwrap();
        assert_eq!(m.values.dim(), (1, 3));
        assert_eq!(m.values[[0, 0]], m.values[[0, 1]].min(m.values[[0, 2]]));
    }

    #[test]
    fn all_degenerate_is_an_error() {
        let env = EnvelopeFrame::new(Array2::from_elem((3, 10), 1.0f64)).unwrap();
        let w = WindowSpec {
            axial_samples: 5,
            lateral_lines: 2,
            ..WindowSpec::default()
        };
        assert!(matches!(entropy_map(&env, w), Err(Error::Degenerate(_))));
    }

    #[test]
    fn wavelength_window_arithmetic() {
        let frame = RfFrame::new(Array2::<f64>::zeros((4, 64)), 40e6, 9e6).unwrap();
        let w = window_from_wavelengths(2.0, &frame, Some(14)).unwrap();
        assert_eq!(w.axial_samples, 18);
        assert_eq!(w.lateral_lines, 14);

        let fast = RfFrame::new(Array2::<f64>::zeros((4, 64)), 80e6, 9e6).unwrap();
        assert_eq!(window_from_wavelengths(2.0, &fast, Some(14)).unwrap().axial_samples, 36);

        assert!(matches!(
            window_from_wavelengths(0.0, &frame, Some(14)),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            window_from_wavelengths(2.0, &frame, None),
            Err(Error::Parameter(_))
        ));

        // 0.2 mm pitch: 2 x 171.1 um / 200 um rounds to 2 lines.
        let pitched = frame.with_line_pitch(0.2e-3).unwrap();
        assert_eq!(window_from_wavelengths(2.0, &pitched, None).unwrap().lateral_lines, 2);
    }

    #[test]
    fn placement_uses_nearest_center() {
        let w = WindowSpec {
            axial_samples: 3,
            lateral_lines: 1,
            stride_axial: 2,
            stride_lateral: 1,
            n_bins: 2,
        };
        let m = EntropyMap {
            values: ndarray::arr2(&[[1.0f64, 2.0, 3.0]]),
            window: w,
            origin_offset: (1.0, 0.0),
        };
        // Centers at axial 1, 3, 5 on a 7-sample line.
        let placed = m.place_on_frame(1, 7);
        assert_eq!(placed, ndarray::arr2(&[[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 3.0]]));
    }
}
