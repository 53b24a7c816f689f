//! Experimental procedure: cross-validated F-measure over the descriptor
//! grid, retrieval and ROC curves, PCA projection and timing benchmarks.

mod bench;
mod curves;
mod cv;
mod pca;
mod report;

pub use bench::{bench_distances, bench_extractors, DistanceTiming, ExtractorTiming, DEFAULT_BENCH_DIM};
pub use curves::{
    interpolated_precision, leave_one_out_scores, precision_recall_curve, roc_curve, PrCurve, RocCurve,
    DEFAULT_ROC_K, RECALL_LEVELS,
};
pub use cv::{
    cross_validate, f_measure, run_grid, stratified_folds, ConfusionCounts, CvConfig, CvResult, GridCell, GridReport,
    TrainSplit,
};
pub use pca::{pca_project, PcaProjection};
pub use report::{
    distance_timing_csv, extractor_timing_csv, svg_bars, svg_lines, svg_scatter, EvaluationReport, Series,
};
