use std::path::PathBuf;

use clap::Args;
use qus_core::raster::to_display;
use qus_core::rf::{envelope, log_compress, read_rf, DEFAULT_DYNAMIC_RANGE_DB};
use serde::{Deserialize, Serialize};

use super::write_gray;
use crate::config::Builder;
use crate::error::{CliResult, WithPath};
use crate::manifest::{parent_dir, RunRecorder};

#[derive(Debug, Args)]
pub struct BmodeArgs {
    /// QRF1 input frame.
    pub input: PathBuf,
    /// Output image; `.png` writes PNG, anything else binary PGM.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Dynamic range in dB.
    #[arg(long)]
    pub dr: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmodeSettings {
    pub dynamic_range_db: f64,
}

pub fn run(args: BmodeArgs) -> CliResult<()> {
    let defaults = BmodeSettings {
        dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
    };
    let resolved = Builder::new(&defaults)
        .file(args.config.as_deref())?
        .set("dynamic_range_db", args.dr)?
        .build()?;
    let mut rec = RunRecorder::start("bmode", resolved.flat.clone());
    rec.input(&args.input);

    let frame = read_rf::<f64>(&args.input).at(&args.input)?;
    let img = log_compress(&envelope(&frame)?, resolved.settings.dynamic_range_db)?;
    let pixels = to_display(img.pixels());
    write_gray(&pixels, &args.output)?;
    rec.output(&args.output);
    rec.finish(&parent_dir(&args.output))?;

    let (h, w) = pixels.dim();
    let black = pixels.iter().filter(|&&p| p == 0).count();
    println!(
        "wrote {} ({h}x{w}, {} dB, {black} pixels at 0)",
        args.output.display(),
        img.dynamic_range_db()
    );
    Ok(())
}
