use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args};
use qus_core::imageio::read_pgm;
use qus_core::metrics::{evaluate, morph_close, threshold, EvalOptions, Mask, Split};
use qus_core::nn::{full_mapping, import_weights, predict_all, read_weights, UNet};
use qus_core::phantom::ManifestEntry;
use serde::{Deserialize, Serialize};

use super::train::{default_cache, load_samples, TrainSettings};
use crate::config::Builder;
use crate::data::{Dataset, SampleCache};
use crate::error::{CliError, CliResult, WithPath};
use crate::manifest::{parent_dir, RunRecorder};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["weights", "oracle", "predictions"])))]
pub struct EvalArgs {
    /// Dataset manifest.json.
    #[arg(long)]
    pub manifest: PathBuf,
    /// QWT1 weights from `train`; config.json and split.json are read from the same directory.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Score the ground-truth masks against themselves.
    #[arg(long)]
    pub oracle: bool,
    /// Directory of predicted masks named like the ground-truth mask files.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Training config; defaults to config.json beside the weights.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Split file; defaults to split.json beside the weights.
    #[arg(long)]
    pub split_file: Option<PathBuf>,
    /// Which partition to score: train, val, test or all.
    #[arg(long)]
    pub split: Option<String>,
    /// Score raw thresholded predictions without morphological closing.
    #[arg(long)]
    pub no_morph: bool,
    /// Radius of the closing disk.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Average the views of each case into one score.
    #[arg(long)]
    pub per_mass: bool,
    /// Method name shown in the report.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Report JSON path; the table is printed to stdout.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    pub split: String,
    pub threshold: f64,
    pub morph: bool,
    pub morph_radius: usize,
    pub per_mass: bool,
    pub method: Option<String>,
    pub batch_size: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            split: "test".into(),
            threshold: 0.5,
            morph: true,
            morph_radius: 3,
            per_mass: false,
            method: None,
            batch_size: 8,
        }
    }
}

fn sibling(weights: Option<&Path>, name: &str) -> Option<PathBuf> {
    weights.map(|w| parent_dir(w).join(name))
}

fn read_split(path: &Path) -> CliResult<Split> {
    let text = fs::read_to_string(path).at(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn select<'a>(data: &'a Dataset, split: Option<&Split>, which: &str) -> CliResult<Vec<&'a ManifestEntry>> {
    if which == "all" {
        return Ok(data.entries.iter().collect());
    }
    let split = split.ok_or_else(|| {
        CliError::Usage(format!("--split {which} needs a split file (from train, or --split-file)"))
    })?;
    let ids = match which {
        "train" => &split.train,
        "val" => &split.val,
        "test" => &split.test,
        other => return Err(CliError::Usage(format!("unknown split {other:?}, expected train, val, test or all"))),
    };
    Ok(data.select(ids))
}

pub fn run(args: EvalArgs) -> CliResult<()> {
    let resolved = Builder::new(&EvalSettings::default())
        .file(args.config.as_deref())?
        .set("split", args.split.clone())?
        .set("threshold", args.threshold)?
        .set("morph", args.no_morph.then_some(false))?
        .set("morph_radius", args.radius)?
        .set("per_mass", args.per_mass.then_some(true))?
        .set("method", args.method.clone())?
        .set("batch_size", args.batch_size)?
        .build()?;
    let s = &resolved.settings;
    let mut rec = RunRecorder::start("eval", resolved.flat.clone());
    rec.input(&args.manifest);

    let data = Dataset::load(&args.manifest)?;
    let split_path = args
        .split_file
        .clone()
        .or_else(|| sibling(args.weights.as_deref(), "split.json"));
    let split = match &split_path {
        Some(p) if s.split != "all" => {
            rec.input(p);
            Some(read_split(p)?)
        }
        _ => None,
    };
    let entries = select(&data, split.as_ref(), &s.split)?;
    if entries.is_empty() {
        return Err(CliError::Input(format!("split {} selects no frames", s.split)));
    }

    let (preds, truths, default_method): (Vec<Mask>, Vec<Mask>, String) = if let Some(weights) = &args.weights {
        let tensors = read_weights(weights).at(weights)?;
        let cfg_path = args
            .train_config
            .clone()
            .unwrap_or_else(|| parent_dir(weights).join("config.json"));
        let train = TrainSettings::from_file(&cfg_path)?;
        rec.input(weights);
        rec.input(&cfg_path);
        let mut net = UNet::<f32>::new(train.network_config(), 0)?;
        let mapping = full_mapping(&net);
        import_weights(&mut net, &tensors, &mapping, false)?;
        let cache = SampleCache::new(args.cache.clone().unwrap_or_else(|| default_cache(&args.manifest)));
        let ids: Vec<String> = entries.iter().map(|e| e.case_id.clone()).collect();
        let samples = load_samples(&data, &cache, &ids, &train.input_spec())?;
        let probs = predict_all(&mut net, &samples, s.batch_size)?;
        let preds = probs.iter().map(|p| threshold(p, s.threshold)).collect::<Result<_, _>>()?;
        let truths = samples.iter().map(|x| threshold(&x.mask, 0.5)).collect::<Result<_, _>>()?;
        (preds, truths, train.mode.to_string())
    } else {
        let truths = entries.iter().map(|e| data.truth(e)).collect::<CliResult<Vec<_>>>()?;
        let preds = match &args.predictions {
            None => truths.clone(),
            Some(dir) => {
                rec.input(dir);
                entries
                    .iter()
                    .map(|e| {
                        let name = Path::new(&e.mask_path).file_name().unwrap_or_default();
                        let path = dir.join(name);
                        Ok(Mask::from_gray8(&read_pgm(&path).at(&path)?))
                    })
                    .collect::<CliResult<Vec<_>>>()?
            }
        };
        let method = if args.oracle { "oracle" } else { "predictions" };
        (preds, truths, method.to_string())
    };

    let preds: Vec<Mask> = if s.morph {
        preds.iter().map(|p| morph_close(p, s.morph_radius)).collect()
    } else {
        preds
    };
    let cases: Vec<(String, String)> = entries.iter().map(|e| (e.case_id.clone(), e.label.clone())).collect();
    let opts = EvalOptions {
        method: s.method.clone().unwrap_or(default_method),
        per_mass: s.per_mass,
        ..EvalOptions::default()
    };
    let report = evaluate(&preds, &truths, &cases, &opts)?;

    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(&args.output, text).at(&args.output)?;
    rec.output(&args.output);
    rec.finish(&parent_dir(&args.output))?;
    print!("{}", report.table());
    Ok(())
}
