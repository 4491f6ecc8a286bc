//! Dataset manifests and cached network inputs.

use std::collections::HashSet;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use qus_core::imageio::read_pgm;
use qus_core::metrics::{CaseLabel, Mask};
use qus_core::nn::{read_weights_from, write_weights_to, NamedTensor, Sample};
use qus_core::phantom::{read_manifest, ManifestEntry};
use qus_core::pipeline::{make_sample, InputSpec};
use qus_core::raster::to_display;
use qus_core::rf::read_rf_from;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, WithPath};

/// Bumped whenever the derivation of cached inputs changes.
const CACHE_VERSION: &str = "qus-sample-v1";

pub struct Dataset {
    pub dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Dataset {
    pub fn load(manifest: &Path) -> CliResult<Self> {
        let entries = read_manifest(manifest).at(manifest)?;
        if entries.is_empty() {
            return Err(CliError::Input(format!("{} lists no frames", manifest.display())));
        }
        let dir = match manifest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        Ok(Self { dir, entries })
    }

    pub fn rf_path(&self, e: &ManifestEntry) -> PathBuf {
        self.dir.join(&e.rf_path)
    }

    pub fn mask_path(&self, e: &ManifestEntry) -> PathBuf {
        self.dir.join(&e.mask_path)
    }

    pub fn cases(&self) -> Vec<CaseLabel> {
        self.entries.iter().map(|e| CaseLabel::new(&e.case_id, &e.label)).collect()
    }

    /// Entries of the given cases, in manifest order.
    pub fn select(&self, case_ids: &[String]) -> Vec<&ManifestEntry> {
        let wanted: HashSet<&str> = case_ids.iter().map(String::as_str).collect();
        self.entries.iter().filter(|e| wanted.contains(e.case_id.as_str())).collect()
    }

    /// Ground-truth mask in display layout `[axial, line]`.
    pub fn truth(&self, e: &ManifestEntry) -> CliResult<Mask> {
        let path = self.mask_path(e);
        Ok(Mask::from_gray8(&read_pgm(&path).at(&path)?))
    }
}

/// Content-addressed store of network-ready samples. The key hashes the
/// input recipe together with the raw bytes of the RF file and the mask, so
/// an edited file or a different recipe never hits a stale entry.
pub struct SampleCache {
    dir: PathBuf,
}

impl SampleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(spec: &InputSpec, rf_bytes: &[u8], mask_bytes: &[u8]) -> String {
        let mut h = Sha256::new();
        h.update(CACHE_VERSION.as_bytes());
        h.update(serde_json::to_vec(spec).expect("input spec serializes"));
        for part in [rf_bytes, mask_bytes] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        hex::encode(h.finalize())
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.qwt"))
    }

    pub fn sample(&self, data: &Dataset, entry: &ManifestEntry, spec: &InputSpec) -> CliResult<Sample<f32>> {
        let rf_path = data.rf_path(entry);
        let mask_path = data.mask_path(entry);
        let rf_bytes = fs::read(&rf_path).at(&rf_path)?;
        let mask_bytes = fs::read(&mask_path).at(&mask_path)?;
        let path = self.path_for(&Self::key(spec, &rf_bytes, &mask_bytes));
        if let Some(sample) = Self::read(&path, spec.hw) {
            return Ok(sample);
        }

        let frame = read_rf_from::<f32, _>(rf_bytes.as_slice()).at(&rf_path)?;
        let display_mask = qus_core::imageio::read_pgm_from(mask_bytes.as_slice()).at(&mask_path)?;
        let (n_axial, n_lines) = display_mask.dim();
        if (n_lines, n_axial) != frame.samples().dim() {
            return Err(CliError::Input(format!(
                "{}: mask is {n_axial}x{n_lines}, frame is {}x{} (axial x lines)",
                mask_path.display(),
                frame.n_axial(),
                frame.n_lines()
            )));
        }
        // PGM masks are stored in display layout; the pipeline wants frame layout.
        let sample = make_sample(&frame, &to_display(&display_mask), spec).at(&rf_path)?;
        self.write(&path, &sample)?;
        Ok(sample)
    }

    fn read(path: &Path, hw: (usize, usize)) -> Option<Sample<f32>> {
        let file = fs::File::open(path).ok()?;
        let tensors = read_weights_from(BufReader::new(file)).ok()?;
        let raster = |name: &str| -> Option<Array2<f32>> {
            let t = tensors.iter().find(|t| t.name == name)?;
            Array2::from_shape_vec(hw, t.data.clone()).ok()
        };
        Some(Sample {
            image: raster("image")?,
            mask: raster("mask")?,
        })
    }

    fn write(&self, path: &Path, sample: &Sample<f32>) -> CliResult<()> {
        let dir = path.parent().expect("cache paths have a parent");
        fs::create_dir_all(dir).at(dir)?;
        let tensor = |name: &str, a: &Array2<f32>| NamedTensor {
            name: name.to_string(),
            shape: vec![a.nrows(), a.ncols()],
            data: a.iter().copied().collect(),
        };
        let tensors = [tensor("image", &sample.image), tensor("mask", &sample.mask)];
        // Write then rename so an interrupted run never leaves a torn entry.
        let tmp = path.with_extension("tmp");
        let file = fs::File::create(&tmp).at(&tmp)?;
        write_weights_to(BufWriter::new(file), &tensors).at(&tmp)?;
        fs::rename(&tmp, path).at(path)?;
        Ok(())
    }
}
