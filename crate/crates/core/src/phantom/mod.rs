//! Synthetic RF phantoms with known inclusion masks.

mod dataset;
mod simulate;

pub use dataset::{
    make_dataset, read_manifest, write_dataset, DatasetFrame, ManifestEntry, SpecRanges, LABEL_BENIGN, LABEL_MALIGNANT,
};
pub use simulate::{simulate, Ellipse, LabeledFrame, PhantomSpec, Pulse, FRACTIONAL_BANDWIDTH};
