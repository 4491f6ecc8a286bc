use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate, Ellipse, LabeledFrame, PhantomSpec};
use crate::error::{Error, Result};
use crate::imageio::write_pgm;
use crate::raster::to_display;
use crate::rf::{write_rf, SampleType};
use crate::scalar::Scalar;

pub const LABEL_MALIGNANT: &str = "malignant-like";
pub const LABEL_BENIGN: &str = "benign-like";

/// Per-case parameter ranges for [`make_dataset`]; each pair is `[low, high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRanges {
    pub n_lines: usize,
    pub n_axial: usize,
    pub fs: f64,
    pub f0: f64,
    pub density_bg: (f64, f64),
    pub density_inc: (f64, f64),
    pub amplitude_ratio_inc: (f64, f64),
    pub radius_axial: (f64, f64),
    pub radius_lateral: (f64, f64),
    /// Cases with a smaller inclusion amplitude ratio are labeled malignant-like.
    pub malignant_below_ratio: f64,
}

impl Default for SpecRanges {
    fn default() -> Self {
        Self {
            n_lines: 64,
            n_axial: 512,
            fs: 40e6,
            f0: 9e6,
            density_bg: (8.0, 14.0),
            density_inc: (0.3, 3.0),
            amplitude_ratio_inc: (0.5, 1.6),
            radius_axial: (90.0, 170.0),
            radius_lateral: (12.0, 22.0),
            malignant_below_ratio: 1.0,
        }
    }
}

impl SpecRanges {
    fn validate(&self) -> Result<()> {
        let pairs = [
            ("density_bg", self.density_bg),
            ("density_inc", self.density_inc),
            ("amplitude_ratio_inc", self.amplitude_ratio_inc),
            ("radius_axial", self.radius_axial),
            ("radius_lateral", self.radius_lateral),
        ];
        for (name, (lo, hi)) in pairs {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Parameter(format!("range {name} = [{lo}, {hi}] is empty")));
            }
        }
        if self.radius_axial.0 <= 0.0 || self.radius_lateral.0 <= 0.0 {
            return Err(Error::Parameter("inclusion radii must be positive".into()));
        }
        if 2.0 * self.radius_axial.1 > (self.n_axial - 1) as f64
            || 2.0 * self.radius_lateral.1 > self.n_lines.saturating_sub(1) as f64
        {
            return Err(Error::Parameter("largest inclusion does not fit in the frame".into()));
        }
        Ok(())
    }
}

/// One simulated view of one case.
#[derive(Debug, Clone)]
pub struct DatasetFrame<T> {
    pub case_id: String,
    /// 0 or 1: the two perpendicular views of a case.
    pub view: usize,
    pub label: String,
    pub spec: PhantomSpec,
    pub frame: LabeledFrame<T>,
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn case_specs(index: usize, ranges: &SpecRanges, seed: u64) -> Vec<PhantomSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let density_bg = draw(&mut rng, ranges.density_bg);
    let density_inc = draw(&mut rng, ranges.density_inc);
    let ratio = draw(&mut rng, ranges.amplitude_ratio_inc);
    let radius_axial = draw(&mut rng, ranges.radius_axial);
    let max_axial = (ranges.n_axial - 1) as f64;
    let max_lateral = (ranges.n_lines - 1) as f64;
    let center_axial = draw(&mut rng, (radius_axial, max_axial - radius_axial));
    (0..2)
        .map(|_| {
            // The perpendicular view cuts the mass along a different lateral extent.
            let radius_lateral = draw(&mut rng, ranges.radius_lateral);
            let center_lateral = draw(&mut rng, (radius_lateral, max_lateral - radius_lateral));
            PhantomSpec {
                n_lines: ranges.n_lines,
                n_axial: ranges.n_axial,
                fs: ranges.fs,
                f0: ranges.f0,
                scatterer_density_bg: density_bg,
                scatterer_density_inc: density_inc,
                amplitude_ratio_inc: ratio,
                inclusion: Some(Ellipse {
                    center_axial,
                    center_lateral,
                    radius_axial,
                    radius_lateral,
                }),
                rng_seed: rng.next_u64(),
                amplitude_scale: 1.0,
                lateral_blur: false,
            }
        })
        .collect()
}

/// Simulates `n_cases` cases, two views each, with per-case RNG streams.
pub fn make_dataset<T: Scalar>(n_cases: usize, ranges: &SpecRanges, seed: u64) -> Result<Vec<DatasetFrame<T>>> {
    if n_cases < 1 {
        return Err(Error::Parameter("dataset needs at least one case".into()));
    }
    ranges.validate()?;
    let per_case: Vec<Vec<DatasetFrame<T>>> = (0..n_cases)
        .into_par_iter()
        .map(|i| {
            let case_id = format!("case{i:04}");
            case_specs(i, ranges, seed)
                .into_iter()
                .enumerate()
                .map(|(view, spec)| {
                    let label = if spec.amplitude_ratio_inc < ranges.malignant_below_ratio {
                        LABEL_MALIGNANT
                    } else {
                        LABEL_BENIGN
                    };
                    Ok(DatasetFrame {
                        case_id: case_id.clone(),
                        view,
                        label: label.to_string(),
                        frame: simulate(&spec)?,
                        spec,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_case.into_iter().flatten().collect())
}

/// Dataset manifest row; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub rf_path: String,
    pub mask_path: String,
    pub label: String,
    #[serde(default)]
    pub case_id: String,
    #[serde(default)]
    pub view: usize,
}

/// Writes `<case>_<view>.qrf` (float32 samples) and `<case>_<view>_mask.pgm`
/// (0/255, depth down the rows) plus `manifest.json`.
pub fn write_dataset<T: Scalar>(dir: impl AsRef<Path>, frames: &[DatasetFrame<T>]) -> Result<Vec<ManifestEntry>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(frames.len());
    for f in frames {
        let stem = format!("{}_{}", f.case_id, f.view);
        let rf_path = format!("{stem}.qrf");
        let mask_path = format!("{stem}_mask.pgm");
        write_rf(&f.frame.rf, SampleType::F32, dir.join(&rf_path))?;
        write_pgm(&to_display(&f.frame.truth_mask.mapv(|m| m * 255)), dir.join(&mask_path))?;
        entries.push(ManifestEntry {
            rf_path,
            mask_path,
            label: f.label.clone(),
            case_id: f.case_id.clone(),
            view: f.view,
        });
    }
    let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &entries)?;
    writeln!(w)?;
    w.flush()?;
    Ok(entries)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let entries: Vec<ManifestEntry> = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    Ok(entries
        .into_iter()
        .enumerate()
        .map(|(i, mut e)| {
            if e.case_id.is_empty() {
                e.case_id = format!("entry{i:04}");
            }
            e
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SpecRanges {
        SpecRanges {
            n_lines: 24,
            n_axial: 128,
            radius_axial: (20.0, 40.0),
            radius_lateral: (4.0, 8.0),
            ..SpecRanges::default()
        }
    }

    #[test]
    fn two_frames_per_case_and_deterministic() {
        let a = make_dataset::<f64>(1, &small(), 9).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].case_id, a[1].case_id);
        assert_eq!(a[0].spec.inclusion.unwrap().radius_axial, a[1].spec.inclusion.unwrap().radius_axial);
        let b = make_dataset::<f64>(1, &small(), 9).unwrap();
        assert_eq!(a[1].frame, b[1].frame);
    }

    #[test]
    fn case_streams_are_independent_of_count() {
        let three = make_dataset::<f64>(3, &small(), 4).unwrap();
        let five = make_dataset::<f64>(5, &small(), 4).unwrap();
        assert_eq!(three[4].frame, five[4].frame);
    }

    #[test]
    fn empty_range_is_rejected() {
        let r = SpecRanges {
            density_inc: (2.0, 1.0),
            ..small()
        };
        assert!(matches!(make_dataset::<f64>(1, &r, 0), Err(Error::Parameter(_))));
        assert!(matches!(make_dataset::<f64>(0, &small(), 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames = make_dataset::<f32>(2, &small(), 1).unwrap();
        let written = write_dataset(dir.path(), &frames).unwrap();
        assert_eq!(written.len(), 4);
        assert_eq!(read_manifest(dir.path().join("manifest.json")).unwrap(), written);
        assert!(dir.path().join("case0001_1.qrf").exists());
        assert!(dir.path().join("case0001_1_mask.pgm").exists());
    }
}
