//! Segmentation scoring, post-processing, dataset splitting and the
//! rank-sum comparison of score distributions.

mod augment;
mod mask;
mod morphology;
mod overlap;
mod rank_sum;
mod report;
mod split;

pub use augment::augment_hflip;
pub use mask::{threshold, Mask};
pub use morphology::{dilate, disk, erode, morph_close};
pub use overlap::{dice, jaccard};
pub use rank_sum::{exact_rank_sum_p, midranks, normal_rank_sum_p, wilcoxon_rank_sum, RankSumTest};
pub use report::{evaluate, CaseScore, EvalOptions, GroupSummary, MetricsReport, ALL_GROUP};
pub use split::{split_dataset, CaseLabel, Split};
