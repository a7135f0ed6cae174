//! Metrics, grid search, Wilcoxon signed-rank tests and the benchmark
//! protocol built from them.

pub mod benchmark;
pub mod grid;
pub mod metrics;
pub mod wilcoxon;

pub use benchmark::{
    benchmark_run, per_sample_predict_time, BenchmarkReport, BenchmarkSettings, DatasetInfo, Manifest,
    ManifestEntry, ModelRow, RowStatus, WilcoxonRow, REPORT_SCHEMA_VERSION,
};
pub use grid::{grid_search, CellParams, CellStatus, GridRow, GridSearchResult, Objective, ParamGrid};
pub use metrics::{confusion_metrics, ClassMetrics, MacroMetrics, MetricsReport};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};
