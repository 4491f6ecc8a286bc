use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use qus_core::metrics::{wilcoxon_rank_sum, MetricsReport, RankSumTest};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, WithPath};
use crate::manifest::{parent_dir, RunRecorder};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// First MetricsReport JSON.
    pub report_a: PathBuf,
    /// Second MetricsReport JSON.
    pub report_b: PathBuf,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Also write the comparison as JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub method_a: String,
    pub method_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub test: RankSumTest,
    pub alpha: f64,
    pub significant: bool,
}

fn read_report(path: &Path) -> CliResult<MetricsReport> {
    let text = fs::read_to_string(path).at(path)?;
    let report: MetricsReport =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: not a metrics report: {e}", path.display())))?;
    if report.per_case.is_empty() {
        return Err(CliError::Input(format!("{}: report has no cases", path.display())));
    }
    Ok(report)
}

pub fn run(args: StatsArgs) -> CliResult<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let a = read_report(&args.report_a)?;
    let b = read_report(&args.report_b)?;
    let test = wilcoxon_rank_sum(&a.dice_scores(), &b.dice_scores())?;
    let significant = test.significant(args.alpha);
    let cmp = Comparison {
        method_a: a.method.clone(),
        method_b: b.method.clone(),
        n_a: a.per_case.len(),
        n_b: b.per_case.len(),
        test,
        alpha: args.alpha,
        significant,
    };

    println!("Dice rank-sum: {} (n={}) vs {} (n={})", cmp.method_a, cmp.n_a, cmp.method_b, cmp.n_b);
    println!(
        "U = {}  p = {:.6} ({})",
        test.u,
        test.p_value,
        if test.exact { "exact" } else { "normal approximation" }
    );
    println!(
        "{} at alpha = {}",
        if significant { "significant" } else { "not significant" },
        args.alpha
    );

    if let Some(out) = &args.output {
        let config = [("alpha".to_string(), serde_json::json!(args.alpha))].into_iter().collect();
        let mut rec = RunRecorder::start("stats", config);
        rec.input(&args.report_a);
        rec.input(&args.report_b);
        let mut text = serde_json::to_string_pretty(&cmp).expect("comparison serializes");
        text.push('\n');
        fs::write(out, text).at(out)?;
        rec.output(out);
        rec.finish(&parent_dir(out))?;
    }
    Ok(())
}
