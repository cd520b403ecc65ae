//! Accuracy, baselines, rank correlations and the error analyses.
//!
//! Every comparison that can tie resolves to side A.

mod analysis;
mod baselines;
mod grid;
mod metrics;

pub use analysis::{
    contrast_pairs, length_robustness_eval, reason_error_analysis, word_distribution_diff,
    ContrastPair, ReasonErrorRow, ReasonUnit, WordDiff,
};
pub use baselines::{
    length_baseline, length_predictions, model_predictions, most_frequent_label_baseline,
    pointwise_predictions, score_baseline, score_predictions, win_rate_scores,
};
pub use grid::{
    cross_topic_validation, stance_grid, CrossValReport, FoldSpec, StanceGrid, StanceSubset,
    StancedPair,
};
pub use metrics::{
    average_ranks, pairwise_accuracy, pearson_r, rank_evaluation, spearman_rho, Grouping,
    PairPrediction, RankReport,
};
