use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::Flat;
use crate::error::{CliResult, WithPath};

/// Record of one command invocation, written as `<command>.run.json` in the
/// directory that holds the command's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: Flat,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub duration_s: f64,
}

pub struct RunRecorder {
    started: Instant,
    manifest: RunManifest,
}

impl RunRecorder {
    pub fn start(command: &str, config: Flat) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                seeds: BTreeMap::new(),
                duration_s: 0.0,
            },
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.manifest.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.to_string(), seed);
    }

    /// Writes the manifest into `dir` and returns its path.
    pub fn finish(mut self, dir: &Path) -> CliResult<PathBuf> {
        self.manifest.duration_s = self.started.elapsed().as_secs_f64();
        let path = dir.join(format!("{}.run.json", self.manifest.command));
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).at(&path)?;
        Ok(path)
    }
}

/// Directory an output file lives in, `.` for bare file names.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
