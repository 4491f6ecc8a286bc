//! Quantitative ultrasound toolkit: envelope detection, B-mode and entropy
//! parametric imaging, speckle phantom simulation, an attention-gated U-Net
//! trained from scratch, and segmentation metrics.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for common uses.

pub mod colormap;
pub mod entropy;
pub mod error;
pub mod imageio;
pub mod metrics;
pub mod nn;
pub mod phantom;
pub mod pipeline;
pub mod raster;
pub mod rf;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RfFrameF32 = rf::RfFrame<f32>;
pub type RfFrameF64 = rf::RfFrame<f64>;
pub type EnvelopeF32 = rf::EnvelopeFrame<f32>;
pub type EnvelopeF64 = rf::EnvelopeFrame<f64>;
pub type EntropyMapF32 = entropy::EntropyMap<f32>;
pub type EntropyMapF64 = entropy::EntropyMap<f64>;
pub type Tensor4F32 = nn::Tensor4<f32>;
pub type Tensor4F64 = nn::Tensor4<f64>;
pub type UNetF32 = nn::UNet<f32>;
pub type UNetF64 = nn::UNet<f64>;
