use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{dice, jaccard, wilcoxon_rank_sum, Mask, RankSumTest};
use crate::error::{Error, Result};
use crate::stats::Summary;

pub const ALL_GROUP: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScore {
    pub case_id: String,
    pub label: String,
    pub dice: f64,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub n: usize,
    pub dice: Summary,
    pub jaccard: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub per_case: Vec<CaseScore>,
    pub groups: Vec<GroupSummary>,
    /// Rank-sum comparison of Dice between the first two label groups.
    pub label_comparison: Option<RankSumTest>,
    pub wilcoxon_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub method: String,
    /// Label groups reported before the pooled group; groups with no cases
    /// are left out. Labels not listed here are appended.
    pub groups: Vec<String>,
    /// Average the frames sharing a case id into one score.
    pub per_mass: bool,
    /// Compare Dice between the first two non-empty label groups.
    pub compare_labels: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            method: "model".into(),
            groups: vec!["benign-like".into(), "malignant-like".into()],
            per_mass: false,
            compare_labels: true,
        }
    }
}

/// Scores predictions against ground truth; `cases[i]` is `(case_id, label)`.
pub fn evaluate(preds: &[Mask], truths: &[Mask], cases: &[(String, String)], opts: &EvalOptions) -> Result<MetricsReport> {
    if preds.len() != truths.len() || preds.len() != cases.len() {
        return Err(Error::Parameter(format!(
            "{} predictions, {} truths and {} case labels do not align",
            preds.len(),
            truths.len(),
            cases.len()
        )));
    }
    let mut per_frame = Vec::with_capacity(preds.len());
    for ((p, t), (id, label)) in preds.iter().zip(truths).zip(cases) {
        per_frame.push(CaseScore {
            case_id: id.clone(),
            label: label.clone(),
            dice: dice(p, t)?,
            jaccard: jaccard(p, t)?,
        });
    }

    let per_case = if opts.per_mass {
        let mut merged: BTreeMap<&str, (String, f64, f64, usize)> = BTreeMap::new();
        for s in &per_frame {
            let e = merged.entry(&s.case_id).or_insert((s.label.clone(), 0.0, 0.0, 0));
            e.1 += s.dice;
            e.2 += s.jaccard;
            e.3 += 1;
        }
        merged
            .into_iter()
            .map(|(id, (label, d, j, n))| CaseScore {
                case_id: id.to_string(),
                label,
                dice: d / n as f64,
                jaccard: j / n as f64,
            })
            .collect()
    } else {
        per_frame
    };

    let mut names: Vec<String> = opts.groups.clone();
    let present: BTreeSet<&str> = per_case.iter().map(|s| s.label.as_str()).collect();
    for label in &present {
        if !names.iter().any(|n| n == label) {
            names.push(label.to_string());
        }
    }
    let summarize = |name: &str, members: Vec<&CaseScore>| -> Option<GroupSummary> {
        let d: Vec<f64> = members.iter().map(|s| s.dice).collect();
        let j: Vec<f64> = members.iter().map(|s| s.jaccard).collect();
        Some(GroupSummary {
            name: name.to_string(),
            n: d.len(),
            dice: Summary::of(&d)?,
            jaccard: Summary::of(&j)?,
        })
    };
    let mut groups: Vec<GroupSummary> = names
        .iter()
        .filter_map(|name| summarize(name, per_case.iter().filter(|s| &s.label == name).collect()))
        .collect();

    let label_comparison = if opts.compare_labels && groups.len() >= 2 {
        let scores = |g: &GroupSummary| -> Vec<f64> {
            per_case.iter().filter(|s| s.label == g.name).map(|s| s.dice).collect()
        };
        Some(wilcoxon_rank_sum(&scores(&groups[0]), &scores(&groups[1]))?)
    } else {
        None
    };
    groups.extend(summarize(ALL_GROUP, per_case.iter().collect()));

    Ok(MetricsReport {
        method: opts.method.clone(),
        wilcoxon_p: label_comparison.map(|t| t.p_value),
        label_comparison,
        per_case,
        groups,
    })
}

impl MetricsReport {
    pub fn dice_scores(&self) -> Vec<f64> {
        self.per_case.iter().map(|s| s.dice).collect()
    }

    pub fn group(&self, name: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// One row per score, one column per group, cells `mean (median±std)`.
    pub fn table(&self) -> String {
        let mut header = vec!["Score".to_string(), "Method".to_string()];
        header.extend(self.groups.iter().map(|g| format!("{} (n={})", g.name, g.n)));
        let cell = |s: &Summary| format!("{:.2} ({:.2}±{:.2})", s.mean, s.median, s.std);
        let rows: Vec<Vec<String>> = [("Dice", true), ("Jaccard", false)]
            .iter()
            .map(|&(name, is_dice)| {
                let mut row = vec![name.to_string(), self.method.clone()];
                row.extend(
                    self.groups
                        .iter()
                        .map(|g| cell(if is_dice { &g.dice } else { &g.jaccard })),
                );
                row
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                std::iter::once(&header)
                    .chain(rows.iter())
                    .map(|r| r[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for row in std::iter::once(&header).chain(rows.iter()) {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        if let Some(t) = &self.label_comparison {
            let _ = writeln!(out, "label comparison (Dice rank-sum): U = {}, p = {:.4}", t.u, t.p_value);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn square(n: usize) -> Mask {
        Mask::new(Array2::from_shape_fn((10, 10), |(y, x)| y < n && x < n))
    }

    fn ids(labels: &[&str]) -> Vec<(String, String)> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| (format!("c{i}"), l.to_string()))
            .collect()
    }

    #[test]
    fn perfect_single_case() {
        let r = evaluate(&[square(3)], &[square(3)], &ids(&["benign-like"]), &EvalOptions::default()).unwrap();
        let all = r.group(ALL_GROUP).unwrap();
        assert_eq!((all.dice.mean, all.dice.median, all.dice.std), (1.0, 1.0, 0.0));
        assert!(r.group("malignant-like").is_none());
        assert!(r.label_comparison.is_none());
    }

    #[test]
    fn two_case_aggregates() {
        // Dice 2·1/(1+4) = 0.4 and 2·4/(4+6) = 0.8.
        let p1 = Mask::new(Array2::from_shape_fn((10, 10), |(y, x)| y == 0 && x == 0));
        let t1 = Mask::new(Array2::from_shape_fn((10, 10), |(y, x)| y == 0 && x < 4));
        let p2 = Mask::new(Array2::from_shape_fn((10, 10), |(y, x)| y == 0 && x < 4));
        let t2 = Mask::new(Array2::from_shape_fn((10, 10), |(y, x)| y == 0 && x < 6));
        let r = evaluate(&[p1, p2], &[t1, t2], &ids(&["a", "a"]), &EvalOptions::default()).unwrap();
        let d = r.group(ALL_GROUP).unwrap().dice;
        assert!((d.mean - 0.6).abs() < 1e-12);
        assert!((d.median - 0.6).abs() < 1e-12);
        assert!((d.std - 0.282_842_712_474_619).abs() < 1e-12);
    }

    #[test]
    fn per_mass_averaging_and_table() {
        let preds = [square(3), square(2), square(3)];
        let truths = [square(3), square(3), square(3)];
        let cases = vec![
            ("m1".to_string(), "benign-like".to_string()),
            ("m1".to_string(), "benign-like".to_string()),
            ("m2".to_string(), "malignant-like".to_string()),
        ];
        let opts = EvalOptions {
            per_mass: true,
            ..EvalOptions::default()
        };
        let r = evaluate(&preds, &truths, &cases, &opts).unwrap();
        assert_eq!(r.per_case.len(), 2);
        assert!((r.per_case[0].dice - (1.0 + 8.0 / 13.0) / 2.0).abs() < 1e-12);
        assert!(r.label_comparison.is_some());
        let table = r.table();
        assert!(table.contains("Dice"));
        assert!(table.contains("benign-like (n=1)"));
    }

    #[test]
    fn misaligned_inputs() {
        assert!(matches!(
            evaluate(&[square(1)], &[], &ids(&["a"]), &EvalOptions::default()),
            Err(Error::Parameter(_))
        ));
    }
}
