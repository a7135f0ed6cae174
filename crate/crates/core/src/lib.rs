//! Kernel support vector machines that minimize the number of margin
//! violations instead of their total size.
//!
//! The proposed model keeps a perfectly classified active set, trains a
//! hard-margin SVM on it, and greedily re-admits excluded samples while the
//! active set stays separable (see [`decomposition`]). Soft-margin, weighted
//! and ν-SVC baselines share the same SMO solver ([`qp_solver`]), and
//! [`evaluation`] implements the benchmark protocol: stratified splits, grid
//! search, per-class metrics, Wilcoxon signed-rank tests and timing.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x > 0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod complexity;
pub mod data;
pub mod decomposition;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod matrix;
pub mod persist;
pub mod qp_solver;
pub mod scalar;
pub mod svm;
pub mod synthetic;

pub use complexity::{fraction_borderline, ComplexityReport, Distance};
pub use data::{
    class_weights, load_csv, load_csv_with_schema, standardize, stratified_split, ClassWeights,
    Dataset, EncodingPolicy, FeatureSchema, LoadOptions, MissingPolicy, Scaler,
};
pub use decomposition::{
    candidate_priorities, extend_samples, initial_solution, run_decomposition, BendersState, Cut,
    IterationRecord,
};
pub use error::{Error, Result};
pub use kernels::{gram_matrix, KernelKind, KernelSpec};
pub use matrix::Matrix;
pub use persist::ModelDocument;
pub use evaluation::{
    benchmark_run, confusion_metrics, grid_search, wilcoxon_signed_rank, BenchmarkReport,
    BenchmarkSettings, GridSearchResult, Manifest, MetricsReport, Objective, ParamGrid,
    WilcoxonResult,
};
pub use qp_solver::{
    kkt_violation_report, solve_c_svm_dual, solve_hard_margin_dual, solve_nu_svm_dual,
    DualSolution, HardMarginOutcome, SolverSettings,
};
pub use scalar::Scalar;
pub use svm::{diagnostics, fit, fit_hard_margin, PriorityOrder, SvmModel, TrainConfig, TrainingDiagnostics, Variant};

/// Double-precision dataset.
pub type Data = Dataset<f64>;
/// Double-precision trained model.
pub type Model = SvmModel<f64>;
/// Double-precision training configuration.
pub type Config = TrainConfig<f64>;
/// Double-precision kernel.
pub type Kernel = KernelSpec<f64>;
/// Single-precision trained model.
pub type ModelF32 = SvmModel<f32>;
/// Single-precision dataset.
pub type DataF32 = Dataset<f32>;
