use std::path::PathBuf;

use clap::Args;
use qus_core::entropy::{entropy_map, window_from_wavelengths, write_entropy_map, WindowSpec};
use qus_core::imageio::write_png_scaled;
use qus_core::raster::to_display;
use qus_core::rf::{envelope, read_rf};
use serde::{Deserialize, Serialize};

use super::parse_pair;
use crate::config::Builder;
use crate::error::{CliResult, WithPath};
use crate::manifest::{parent_dir, RunRecorder};

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// QRF1 input frame.
    pub input: PathBuf,
    /// Output QEM1 map; a PNG rendering is written next to it.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Window size in samples, axial x lateral.
    #[arg(long, value_parser = parse_pair, conflicts_with = "wavelengths")]
    pub window: Option<(usize, usize)>,
    /// Window size in acoustic wavelengths, square in physical units.
    #[arg(long)]
    pub wavelengths: Option<f64>,
    /// Lateral window extent for `--wavelengths` when the file has no line pitch.
    #[arg(long)]
    pub lateral_lines: Option<usize>,
    /// Window step, axial x lateral.
    #[arg(long, value_parser = parse_pair)]
    pub stride: Option<(usize, usize)>,
    /// Histogram bins per window.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Path of the PNG rendering; defaults to the output with a `.png` extension.
    #[arg(long)]
    pub png: Option<PathBuf>,
    /// Render the PNG in gray levels instead of viridis.
    #[arg(long)]
    pub gray: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySettings {
    pub window: WindowSpec,
    /// When set, replaces the window extent (not the stride or bins).
    pub wavelengths: Option<f64>,
    pub lateral_lines: Option<usize>,
    pub colormap: bool,
}

pub fn run(args: EntropyArgs) -> CliResult<()> {
    let defaults = EntropySettings {
        window: WindowSpec::default(),
        wavelengths: None,
        lateral_lines: None,
        colormap: true,
    };
    let resolved = Builder::new(&defaults)
        .file(args.config.as_deref())?
        .set("window.axial_samples", args.window.map(|w| w.0))?
        .set("window.lateral_lines", args.window.map(|w| w.1))?
        .set("window.stride_axial", args.stride.map(|s| s.0))?
        .set("window.stride_lateral", args.stride.map(|s| s.1))?
        .set("window.n_bins", args.bins)?
        .set("wavelengths", args.wavelengths)?
        .set("lateral_lines", args.lateral_lines)?
        .set("colormap", args.gray.then_some(false))?
        .build()?;
    let s = &resolved.settings;
    let mut rec = RunRecorder::start("entropy", resolved.flat.clone());
    rec.input(&args.input);

    let frame = read_rf::<f64>(&args.input).at(&args.input)?;
    let mut window = s.window;
    if let Some(n) = s.wavelengths {
        let extent = window_from_wavelengths(n, &frame, s.lateral_lines)?;
        window.axial_samples = extent.axial_samples;
        window.lateral_lines = extent.lateral_lines;
    }
    let map = entropy_map(&envelope(&frame)?, window)?;
    write_entropy_map(&map, &args.output).at(&args.output)?;
    let png = args.png.clone().unwrap_or_else(|| args.output.with_extension("png"));
    write_png_scaled(&to_display(&map.values), s.colormap, &png).at(&png)?;
    rec.output(&args.output);
    rec.output(&png);
    rec.finish(&parent_dir(&args.output))?;

    let (rows, cols) = map.values.dim();
    println!(
        "wrote {} ({rows} lateral x {cols} axial positions, window {}x{}, mean {:.4} nats)",
        args.output.display(),
        window.axial_samples,
        window.lateral_lines,
        map.mean()
    );
    Ok(())
}
