use std::path::PathBuf;

use clap::Args;
use qus_core::phantom::{make_dataset, write_dataset, SpecRanges};
use serde::{Deserialize, Serialize};

use crate::config::Builder;
use crate::error::{CliError, CliResult, WithPath};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output dataset directory.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Number of cases; each case yields two perpendicular views.
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scanlines per frame.
    #[arg(long)]
    pub lines: Option<usize>,
    /// Axial samples per scanline.
    #[arg(long)]
    pub axial: Option<usize>,
    /// JSON file with `cases`, `seed` and `ranges.*` keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSettings {
    pub cases: usize,
    pub seed: u64,
    pub ranges: SpecRanges,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            cases: 4,
            seed: 0,
            ranges: SpecRanges::default(),
        }
    }
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let resolved = Builder::new(&SimulateSettings::default())
        .file(args.config.as_deref())?
        .set("cases", args.cases)?
        .set("seed", args.seed)?
        .set("ranges.n_lines", args.lines)?
        .set("ranges.n_axial", args.axial)?
        .build()?;
    let s = &resolved.settings;
    if s.cases == 0 {
        return Err(CliError::Usage("--cases must be at least 1".into()));
    }
    let mut rec = RunRecorder::start("simulate", resolved.flat.clone());
    rec.seed("dataset", s.seed);
    if let Some(cfg) = &args.config {
        rec.input(cfg);
    }

    let frames = make_dataset::<f64>(s.cases, &s.ranges, s.seed)?;
    let entries = write_dataset(&args.output, &frames).at(&args.output)?;
    for e in &entries {
        rec.output(&args.output.join(&e.rf_path));
        rec.output(&args.output.join(&e.mask_path));
    }
    rec.output(&args.output.join("manifest.json"));
    rec.finish(&args.output)?;
    println!(
        "simulated {} cases ({} frames) into {}",
        s.cases,
        entries.len(),
        args.output.display()
    );
    Ok(())
}
