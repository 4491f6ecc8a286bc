use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qus_core::entropy::WindowSpec;
use qus_core::metrics::{augment_hflip, split_dataset, Split};
use qus_core::nn::{
    export_weights, first_blocks_mapping, import_weights, read_weights, train_network, write_history_csv,
    NetworkConfig, Sample, TrainConfig, UNet,
};
use qus_core::pipeline::{InputKind, InputSpec};
use qus_core::rf::DEFAULT_DYNAMIC_RANGE_DB;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::parse_pair;
use crate::config::{Builder, Resolved};
use crate::data::{Dataset, SampleCache};
use crate::error::{CliError, CliResult, WithPath};
use crate::manifest::RunRecorder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Log-compressed B-mode images.
    #[value(alias = "bmode")]
    Us,
    /// Sliding-window entropy maps.
    Entropy,
}

impl From<ModeArg> for InputKind {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Us => InputKind::Bmode,
            ModeArg::Entropy => InputKind::Entropy,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest.json.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output directory for weights, history and split.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub base_channels: Option<usize>,
    /// Square network input size in pixels.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Seed for initialization and batch order.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Dynamic range in dB for B-mode inputs.
    #[arg(long)]
    pub dr: Option<f64>,
    /// Entropy window, axial x lateral samples.
    #[arg(long, value_parser = parse_pair)]
    pub window: Option<(usize, usize)>,
    /// Entropy window step, axial x lateral.
    #[arg(long, value_parser = parse_pair)]
    pub stride: Option<(usize, usize)>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub no_attention: bool,
    #[arg(long)]
    pub no_matching: bool,
    #[arg(long)]
    pub no_batchnorm: bool,
    /// Train without mirrored copies of the training frames.
    #[arg(long)]
    pub no_augment: bool,
    /// QWT1 file whose first two encoder blocks initialize the network.
    #[arg(long)]
    pub import_weights: Option<PathBuf>,
    /// Keep imported tensors fixed during training.
    #[arg(long, requires = "import_weights")]
    pub freeze_imported: bool,
    /// Cache directory for derived inputs; defaults to `.qus-cache` beside the manifest.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSettings {
    pub depth: usize,
    pub base_channels: usize,
    pub attention: bool,
    pub matching_layer: bool,
    pub batchnorm: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSettings {
    pub size: usize,
    pub dynamic_range_db: f64,
    pub window: WindowSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSettings {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub mode: InputKind,
    pub net: NetSettings,
    pub input: InputSettings,
    pub train: TrainConfig,
    pub split: SplitSettings,
    pub augment_hflip: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let net = NetworkConfig::default();
        Self {
            mode: InputKind::Bmode,
            net: NetSettings {
                depth: net.depth,
                base_channels: net.base_channels,
                attention: net.use_attention,
                matching_layer: net.use_matching_layer,
                batchnorm: net.batchnorm,
            },
            input: InputSettings {
                size: net.input_hw.0,
                dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
                window: WindowSpec::default(),
            },
            train: TrainConfig::default(),
            split: SplitSettings {
                train: 0.55,
                val: 0.15,
                test: 0.30,
                seed: 0,
            },
            augment_hflip: true,
        }
    }
}

impl TrainSettings {
    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            depth: self.net.depth,
            base_channels: self.net.base_channels,
            input_hw: (self.input.size, self.input.size),
            use_attention: self.net.attention,
            use_matching_layer: self.net.matching_layer,
            batchnorm: self.net.batchnorm,
        }
    }

    pub fn input_spec(&self) -> InputSpec {
        InputSpec {
            kind: self.mode,
            dynamic_range_db: self.input.dynamic_range_db,
            window: self.input.window,
            hw: (self.input.size, self.input.size),
        }
    }

    /// Reads the `config.json` a training run left behind.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        Ok(Builder::new(&Self::default()).file(Some(path))?.build()?.settings)
    }
}

pub fn default_cache(manifest: &Path) -> PathBuf {
    crate::manifest::parent_dir(manifest).join(".qus-cache")
}

pub fn load_samples(
    data: &Dataset,
    cache: &SampleCache,
    case_ids: &[String],
    spec: &InputSpec,
) -> CliResult<Vec<Sample<f32>>> {
    data.select(case_ids)
        .par_iter()
        .map(|e| cache.sample(data, e, spec))
        .collect()
}

fn resolve(args: &TrainArgs) -> CliResult<Resolved<TrainSettings>> {
    Builder::new(&TrainSettings::default())
        .file(args.config.as_deref())?
        .set("mode", args.mode.map(InputKind::from))?
        .set("net.depth", args.depth)?
        .set("net.base_channels", args.base_channels)?
        .set("net.attention", args.no_attention.then_some(false))?
        .set("net.matching_layer", args.no_matching.then_some(false))?
        .set("net.batchnorm", args.no_batchnorm.then_some(false))?
        .set("input.size", args.size)?
        .set("input.dynamic_range_db", args.dr)?
        .set("input.window.axial_samples", args.window.map(|w| w.0))?
        .set("input.window.lateral_lines", args.window.map(|w| w.1))?
        .set("input.window.stride_axial", args.stride.map(|s| s.0))?
        .set("input.window.stride_lateral", args.stride.map(|s| s.1))?
        .set("input.window.n_bins", args.bins)?
        .set("train.max_epochs", args.epochs)?
        .set("train.lr", args.lr)?
        .set("train.batch_size", args.batch_size)?
        .set("train.rng_seed", args.seed)?
        .set("split.seed", args.split_seed)?
        .set("augment_hflip", args.no_augment.then_some(false))?
        .build()
}

fn write_json<V: Serialize>(value: &V, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).at(path)
}

pub fn run(args: TrainArgs) -> CliResult<()> {
    let resolved = resolve(&args)?;
    let s = &resolved.settings;
    let net_cfg = s.network_config();
    net_cfg.validate()?;
    s.train.validate()?;
    let mut rec = RunRecorder::start("train", resolved.flat.clone());
    rec.input(&args.manifest);
    rec.seed("train.rng_seed", s.train.rng_seed);
    rec.seed("split.seed", s.split.seed);

    let data = Dataset::load(&args.manifest)?;
    let split: Split = split_dataset(&data.cases(), (s.split.train, s.split.val, s.split.test), s.split.seed)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(CliError::Input(format!(
            "{} cases give an empty training or validation set",
            split.train.len() + split.val.len() + split.test.len()
        )));
    }
    let spec = s.input_spec();
    let cache = SampleCache::new(args.cache.clone().unwrap_or_else(|| default_cache(&args.manifest)));
    let mut train_set = load_samples(&data, &cache, &split.train, &spec)?;
    let val_set = load_samples(&data, &cache, &split.val, &spec)?;
    if s.augment_hflip {
        let pairs: Vec<_> = train_set.into_iter().map(|x| (x.image, x.mask)).collect();
        train_set = augment_hflip(&pairs)
            .into_iter()
            .map(|(image, mask)| Sample { image, mask })
            .collect();
    }

    let mut net = UNet::<f32>::new(net_cfg, s.train.rng_seed)?;
    if let Some(path) = &args.import_weights {
        let tensors = read_weights(path).at(path)?;
        let mapping = first_blocks_mapping(&net);
        import_weights(&mut net, &tensors, &mapping, args.freeze_imported)?;
        rec.input(path);
    }
    let quiet = args.quiet;
    let outcome = train_network(&mut net, &train_set, &val_set, &s.train, |r| {
        if !quiet {
            eprintln!(
                "epoch {:>3}  loss {:.4}  val dice {:.4}  lr {:.2e}",
                r.epoch, r.train_loss, r.val_dice, r.lr
            );
        }
    })?;

    fs::create_dir_all(&args.output).at(&args.output)?;
    let out = |name: &str| args.output.join(name);
    export_weights(&net, out("weights.qwt")).at(&out("weights.qwt"))?;
    write_history_csv(out("history.csv"), &outcome.history).at(&out("history.csv"))?;
    write_json(&resolved.flat, &out("config.json"))?;
    write_json(&split, &out("split.json"))?;
    for name in ["weights.qwt", "history.csv", "config.json", "split.json"] {
        rec.output(&out(name));
    }
    rec.finish(&args.output)?;

    println!(
        "trained {} model: {} epochs, best val dice {:.4} at epoch {}{}",
        s.mode,
        outcome.history.len(),
        outcome.best_val_dice,
        outcome.best_epoch,
        if outcome.stopped_early { " (stopped early)" } else { "" }
    );
    Ok(())
}
