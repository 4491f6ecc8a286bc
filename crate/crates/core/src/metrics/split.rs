use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A case identifier with its class label. Several frames of one case may
/// appear; they are kept together.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CaseLabel {
    pub id: String,
    pub label: String,
}

impl CaseLabel {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

/// Case ids per partition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl Split {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Distributes `total` items across weights by largest remainder; ties in
/// the remainder go to the earlier entry.
fn largest_remainder(total: usize, quotas: &[f64]) -> Vec<usize> {
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        alloc[k] += 1;
    }
    alloc
}

/// Stratified case-level partition into train / validation / test.
///
/// Held-out set sizes are `ceil(fraction · N)`, the training set takes the
/// remainder. Within each held-out set the per-label counts follow the global
/// label proportions by largest-remainder rounding. Cases are sorted by id
/// and shuffled per label with the seed, so the result does not depend on
/// the input order.
pub fn split_dataset(cases: &[CaseLabel], fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (f_train, f_val, f_test) = fractions;
    for f in [f_train, f_val, f_test] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Parameter(format!("split fraction {f} outside [0, 1]")));
        }
    }
    if (f_train + f_val + f_test - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter("split fractions must sum to 1".into()));
    }

    let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
    for c in cases {
        if let Some(prev) = by_id.insert(&c.id, &c.label) {
            if prev != c.label {
                return Err(Error::Parameter(format!("case {} has conflicting labels", c.id)));
            }
        }
    }
    let mut by_label: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, label) in &by_id {
        by_label.entry(label).or_default().push(id);
    }
    let parts = [f_train, f_val, f_test].iter().filter(|&&f| f > 0.0).count();
    if let Some((label, ids)) = by_label.iter().find(|(_, ids)| ids.len() < parts) {
        return Err(Error::Parameter(format!(
            "label {label} has {} cases, fewer than the {parts} partitions",
            ids.len()
        )));
    }

    let total = by_id.len();
    let held_out = |f: f64| ((f * total as f64) - 1e-9).ceil().max(0.0) as usize;
    let (n_val, n_test) = (held_out(f_val), held_out(f_test));
    if n_val + n_test > total {
        return Err(Error::Parameter("held-out sets exceed the number of cases".into()));
    }

    let label_sizes: Vec<usize> = by_label.values().map(Vec::len).collect();
    let share = |n_set: usize| -> Vec<usize> {
        let quotas: Vec<f64> = label_sizes
            .iter()
            .map(|&n| n_set as f64 * n as f64 / total as f64)
            .collect();
        largest_remainder(n_set, &quotas)
    };
    let val_counts = share(n_val);
    let test_counts = share(n_test);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split::default();
    for (k, ids) in by_label.values().enumerate() {
        let mut ids: Vec<&str> = ids.clone();
        ids.shuffle(&mut rng);
        let (nv, nt) = (val_counts[k], test_counts[k]);
        if nv + nt > ids.len() {
            return Err(Error::Parameter("label too small for the held-out sets".into()));
        }
        split.val.extend(ids[..nv].iter().map(|s| s.to_string()));
        split.test.extend(ids[nv..nv + nt].iter().map(|s| s.to_string()));
        split.train.extend(ids[nv + nt..].iter().map(|s| s.to_string()));
    }
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        part.sort();
    }
    Ok(split)
}
