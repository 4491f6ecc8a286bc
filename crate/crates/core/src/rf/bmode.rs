use ndarray::Array2;

use super::EnvelopeFrame;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 50.0;

/// 8-bit log-compressed image in the layout of the source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BModeImage {
    pixels: Array2<u8>,
    dynamic_range_db: f64,
}

impl BModeImage {
    pub fn pixels(&self) -> &Array2<u8> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array2<u8> {
        self.pixels
    }

    pub fn dynamic_range_db(&self) -> f64 {
        self.dynamic_range_db
    }
}

/// Maps amplitude `A` to `round(255 · clamp(20·log10(A/A_max) + DR, 0, DR) / DR)`.
pub fn log_compress<T: Scalar>(env: &EnvelopeFrame<T>, dynamic_range_db: f64) -> Result<BModeImage> {
    if !(dynamic_range_db.is_finite() && dynamic_range_db > 0.0) {
        return Err(Error::Parameter(format!(
            "dynamic range must be positive, got {dynamic_range_db}"
        )));
    }
    let a_max = env
        .amplitude()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.as_f64()));
    if a_max <= 0.0 {
        return Err(Error::Degenerate(
            "envelope has no positive amplitude to normalize against".into(),
        ));
    }
    let pixels = env.amplitude().mapv(|a| {
        let a = a.as_f64();
        let db = if a > 0.0 {
            20.0 * (a / a_max).log10() + dynamic_range_db
        } else {
            0.0
        };
        let level = 255.0 * db.clamp(0.0, dynamic_range_db) / dynamic_range_db;
        level.round().clamp(0.0, 255.0) as u8
    });
    Ok(BModeImage {
        pixels,
        dynamic_range_db,
    })
}
