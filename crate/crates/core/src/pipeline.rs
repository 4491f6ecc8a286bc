//! From RF frames to network-ready rasters.
//!
//! Everything returned here is in display layout `[axial, line]` and resized
//! to the network input size.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_map, WindowSpec};
use crate::error::{Error, Result};
use crate::nn::Sample;
use crate::raster::{normalize_min_max, resize_bilinear, resize_nearest, to_display};
use crate::rf::{envelope, log_compress, RfFrame, DEFAULT_DYNAMIC_RANGE_DB};
use crate::scalar::Scalar;

/// Which parametric image feeds the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Bmode,
    Entropy,
}

impl std::str::FromStr for InputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bmode" => Ok(Self::Bmode),
            "entropy" => Ok(Self::Entropy),
            other => Err(Error::Config(format!("unknown input kind {other:?}, expected bmode or entropy"))),
        }
    }
}

impl std::fmt::Display for InputKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Bmode => "bmode",
            Self::Entropy => "entropy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub kind: InputKind,
    pub dynamic_range_db: f64,
    pub window: WindowSpec,
    pub hw: (usize, usize),
}

impl Default for InputSpec {
    fn default() -> Self {
        Self {
            kind: InputKind::Bmode,
            dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
            window: WindowSpec::default(),
            hw: (224, 224),
        }
    }
}

/// B-mode scaled to `[0, 1]` by 1/255.
pub fn bmode_input<T: Scalar>(frame: &RfFrame<T>, dynamic_range_db: f64, hw: (usize, usize)) -> Result<Array2<T>> {
    let img = log_compress(&envelope(frame)?, dynamic_range_db)?;
    let scaled = to_display(img.pixels()).mapv(|p| T::of(p as f64 / 255.0));
    resize_bilinear(&scaled, hw.0, hw.1)
}

/// Entropy map placed on the frame grid, min-max normalized per image.
pub fn entropy_input<T: Scalar>(frame: &RfFrame<T>, window: WindowSpec, hw: (usize, usize)) -> Result<Array2<T>> {
    let map = entropy_map(&envelope(frame)?, window)?;
    let full = map.place_on_frame(frame.n_lines(), frame.n_axial());
    Ok(normalize_min_max(&resize_bilinear(&to_display(&full), hw.0, hw.1)?))
}

pub fn network_input<T: Scalar>(frame: &RfFrame<T>, spec: &InputSpec) -> Result<Array2<T>> {
    match spec.kind {
        InputKind::Bmode => bmode_input(frame, spec.dynamic_range_db, spec.hw),
        InputKind::Entropy => entropy_input(frame, spec.window, spec.hw),
    }
}

/// Frame-layout binary (0/1 or 0/255) mask to a display-layout 0/1 target.
pub fn mask_target<T: Scalar>(frame_mask: &Array2<u8>, hw: (usize, usize)) -> Result<Array2<T>> {
    let resized = resize_nearest(&to_display(frame_mask), hw.0, hw.1)?;
    Ok(resized.mapv(|v| if v > 0 { T::one() } else { T::zero() }))
}

pub fn make_sample<T: Scalar>(frame: &RfFrame<T>, frame_mask: &Array2<u8>, spec: &InputSpec) -> Result<Sample<T>> {
    if frame_mask.dim() != frame.samples().dim() {
        return Err(Error::Shape(format!(
            "mask {:?} does not match frame {:?}",
            frame_mask.dim(),
            frame.samples().dim()
        )));
    }
    Ok(Sample {
        image: network_input(frame, spec)?,
        mask: mask_target(frame_mask, spec.hw)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{simulate, Ellipse, PhantomSpec};

    fn spec() -> PhantomSpec {
        PhantomSpec {
            n_lines: 32,
            n_axial: 256,
            inclusion: Some(Ellipse {
                center_axial: 128.0,
                center_lateral: 16.0,
                radius_axial: 60.0,
                radius_lateral: 8.0,
            }),
            ..Default::default()
        }
    }

    #[test]
    fn inputs_are_display_sized_and_in_unit_range() {
        let lf = simulate::<f64>(&spec()).unwrap();
        for kind in [InputKind::Bmode, InputKind::Entropy] {
            let s = InputSpec {
                kind,
                window: WindowSpec {
                    axial_samples: 20,
                    lateral_lines: 4,
                    ..Default::default()
                },
                hw: (32, 16),
                ..Default::default()
            };
            let sample = make_sample(&lf.rf, &lf.truth_mask, &s).unwrap();
            assert_eq!(sample.image.dim(), (32, 16));
            assert!(sample.image.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(sample.mask.iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn mask_orientation_follows_display() {
        let mut m = Array2::<u8>::zeros((4, 8));
        m[[0, 7]] = 1; // first line, deepest sample
        let t: Array2<f64> = mask_target(&m, (8, 4)).unwrap();
        assert_eq!(t[[7, 0]], 1.0);
        assert_eq!(t.sum(), 1.0);
    }

    #[test]
    fn parses_kind() {
        assert_eq!("entropy".parse::<InputKind>().unwrap(), InputKind::Entropy);
        assert!("rgb".parse::<InputKind>().is_err());
    }
}
