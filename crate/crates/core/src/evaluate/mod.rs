//! Measurement on trained encoders: pair classification with a small probe,
//! nearest-neighbour search, similarity statistics and correlations.

mod classify;
mod probe;
mod report;
mod search;
mod stats;

pub use classify::{
    best_threshold_accuracy, classify_accuracy, majority_baseline, majority_label, AlwaysLabel,
    Complement, PairClassifier,
};
pub use probe::{
    bce, train_probe, train_probe_on_features, MlpProbe, ProbeConfig, ProbeReport,
    DEFAULT_PROBE_HIDDEN,
};
pub use report::{
    grade_stats_csv, histogram_csv, topk_tsv, write_grade_stats_csv, write_histogram_csv,
    write_topk_tsv,
};
pub use search::{
    bins_for_width, similarity_histogram, topk_similar, EmbeddingIndex, Histogram, SHARD_ROWS,
};
pub use stats::{
    grade_similarity_stats, grade_stats_from_scores, midranks, pearson_r, spearman_rho,
    welch_t_test, GradeStats, GradeSummary, GradeTest, WelchTest, SIGNIFICANCE_LEVEL,
};
