//! Local Shannon entropy of envelope amplitudes over a sliding window.

mod container;
mod estimator;
mod map;

pub use container::{read_entropy_map, read_entropy_map_from, write_entropy_map, write_entropy_map_to, EM_MAGIC};
pub use estimator::{estimate_entropy, EntropyEstimator};
pub use map::{entropy_map, window_from_wavelengths, EntropyMap, WindowSpec};
