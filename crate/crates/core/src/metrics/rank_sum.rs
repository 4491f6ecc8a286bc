use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::normal_sf;

/// Largest pooled sample size for which the exact null distribution is used.
const EXACT_MAX_TOTAL: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Mann–Whitney U of the first sample: pairs `(x, y)` with `x > y`,
    /// ties counting one half.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Whether `p_value` came from exact enumeration.
    pub exact: bool,
}

impl RankSumTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// 1-based ranks of the pooled sample, ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pooled<T: Scalar>(x: &[T], y: &[T]) -> Result<Vec<f64>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Parameter("rank-sum test needs two non-empty samples".into()));
    }
    let all: Vec<f64> = x.iter().chain(y).map(|v| v.as_f64()).collect();
    if all.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("rank-sum sample contains NaN".into()));
    }
    Ok(all)
}

fn u_statistic(ranks: &[f64], n: usize) -> f64 {
    let r: f64 = ranks[..n].iter().sum();
    r - (n * (n + 1)) as f64 / 2.0
}

/// Number of orderings of `n` x's and `m` y's producing each U value.
fn u_counts(n: usize, m: usize) -> Vec<f64> {
    // table[i][j][u]: arrangements of i x's and j y's with U = u. The largest
    // element is either an x (beating all j y's) or a y (beating nothing).
    let max_u = n * m;
    let mut prev: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; m + 1];
    for row in prev.iter_mut() {
        row[0] = 1.0;
    }
    for _ in 1..=n {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; m + 1];
        for j in 0..=m {
            for u in 0..=max_u {
                let from_x = if u >= j { prev[j][u - j] } else { 0.0 };
                let from_y = if j > 0 { cur[j - 1][u] } else { 0.0 };
                cur[j][u] = from_x + from_y;
            }
        }
        prev = cur;
    }
    prev.swap_remove(m)
}

/// Exact two-sided p-value of an observed `u` for tie-free samples of sizes
/// `n` and `m`: twice the smaller tail, capped at 1.
pub fn exact_rank_sum_p(u: f64, n: usize, m: usize) -> f64 {
    let counts = u_counts(n, m);
    let total: f64 = counts.iter().sum();
    let (mut lower, mut upper) = (0.0, 0.0);
    for (k, &c) in counts.iter().enumerate() {
        let k = k as f64;
        if k <= u + 1e-9 {
            lower += c;
        }
        if k >= u - 1e-9 {
            upper += c;
        }
    }
    (2.0 * lower.min(upper) / total).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity correction.
pub fn normal_rank_sum_p<T: Scalar>(x: &[T], y: &[T]) -> Result<(f64, f64)> {
    let all = pooled(x, y)?;
    let (n, m) = (x.len() as f64, y.len() as f64);
    let total = n + m;
    let ranks = midranks(&all);
    let u = u_statistic(&ranks, x.len());

    let mut sorted = all.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * m / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)).max(1.0));
    if var <= 0.0 {
        return Ok((u, 1.0));
    }
    let dev = ((u - n * m / 2.0).abs() - 0.5).max(0.0);
    Ok((u, (2.0 * normal_sf(dev / var.sqrt())).min(1.0)))
}

/// Two-sided Wilcoxon rank-sum (Mann–Whitney U) test.
///
/// Tie-free samples with at most 12 pooled observations use the exact null
/// distribution; otherwise the tie-corrected normal approximation.
pub fn wilcoxon_rank_sum<T: Scalar>(x: &[T], y: &[T]) -> Result<RankSumTest> {
    let all = pooled(x, y)?;
    let ranks = midranks(&all);
    let mut sorted = all.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let has_ties = sorted.windows(2).any(|w| w[0] == w[1]);
    if !has_ties && all.len() <= EXACT_MAX_TOTAL {
        let u = u_statistic(&ranks, x.len());
        return Ok(RankSumTest {
            u,
            p_value: exact_rank_sum_p(u, x.len(), y.len()),
            exact: true,
        });
    }
    let (u, p_value) = normal_rank_sum_p(x, y)?;
    Ok(RankSumTest {
        u,
        p_value,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn fully_separated_triplets() {
        let t = wilcoxon_rank_sum(&[1.0f64, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.u, 0.0);
        assert!(t.exact);
        assert!((t.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn swapping_reflects_u() {
        let x = [0.3f64, 0.9, 0.1, 0.55];
        let y = [0.2f64, 0.7, 0.8];
        let a = wilcoxon_rank_sum(&x, &y).unwrap();
        let b = wilcoxon_rank_sum(&y, &x).unwrap();
        assert_eq!(a.u + b.u, 12.0);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn identical_samples() {
        let x = [0.1f64, 0.4, 0.4, 0.9, 0.7];
        let t = wilcoxon_rank_sum(&x, &x).unwrap();
        assert_eq!(t.u, 12.5);
        assert!(t.p_value >= 0.99);
    }

    #[test]
    fn exact_counts_sum_to_binomial() {
        let c = u_counts(3, 3);
        assert_eq!(c, vec![1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 2.0, 1.0, 1.0]);
        assert_eq!(u_counts(5, 7).iter().sum::<f64>(), 792.0);
    }

    #[test]
    fn empty_sample() {
        assert!(matches!(wilcoxon_rank_sum::<f64>(&[], &[1.0]), Err(Error::Parameter(_))));
    }
}
