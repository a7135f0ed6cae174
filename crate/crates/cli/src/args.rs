use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "bsvm", version, about = "Train, apply and benchmark margin-violation-count SVMs")]
pub struct Cli {
    /// JSON file with default values for any flag; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a CSV file and print its metrics as JSON.
    Train(TrainArgs),
    /// Write labels and decision values for a CSV file.
    Predict(PredictArgs),
    /// Print the N1 complexity of a CSV file as JSON.
    Complexity(ComplexityArgs),
    /// Run the tuning and evaluation protocol over a dataset manifest.
    Benchmark(BenchmarkArgs),
    /// Run the protocol on one dataset over several seeds and test the
    /// paired per-seed scores.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelArg {
    Linear,
    Rbf,
    #[value(alias = "poly")]
    #[serde(alias = "poly")]
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderArg {
    #[value(alias = "descending")]
    #[serde(alias = "descending")]
    Desc,
    #[value(alias = "ascending")]
    #[serde(alias = "ascending")]
    Asc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingArg {
    Drop,
    Impute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingArg {
    Onehot,
    Strict,
}

/// How a CSV file is read.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,

    /// Label column name (default: last column).
    #[arg(long)]
    pub label_column: Option<String>,

    /// Raw label value treated as the positive class (default: minority).
    #[arg(long)]
    pub positive_label: Option<String>,

    /// Handling of rows with missing feature cells.
    #[arg(long, value_enum)]
    pub missing: Option<MissingArg>,

    /// Handling of non-numeric feature columns.
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingArg>,
}

/// Model family and hyperparameters.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// soft_margin, weighted, nu_svc or proposed.
    #[arg(long)]
    pub variant: Option<String>,

    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,

    /// Penalty C.
    #[arg(long = "C", alias = "c", value_name = "C")]
    pub c: Option<f64>,

    /// Kernel width (default: 1 / (features · variance)).
    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long)]
    pub nu: Option<f64>,

    /// Polynomial degree.
    #[arg(long)]
    pub degree: Option<u32>,

    /// Polynomial offset.
    #[arg(long)]
    pub coef0: Option<f64>,

    /// `auto` for balanced weights, or a map such as `+1:2,-1:1`.
    #[arg(long)]
    pub weights: Option<String>,

    /// Candidate order of the proposed variant.
    #[arg(long, value_enum)]
    pub priority_order: Option<OrderArg>,

    /// KKT tolerance of the solver.
    #[arg(long)]
    pub tolerance: Option<f64>,

    /// Iteration cap of every solver call.
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Hold out this fraction (stratified, seeded) and report test metrics.
    #[arg(long)]
    pub test_ratio: Option<f64>,

    /// Train on raw features instead of standardized ones.
    #[arg(long)]
    pub no_standardize: bool,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Model file to write.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// JSON-lines trace of the proposed variant's iterations.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// Feature CSV with the training columns in training order.
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,

    /// Output CSV (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Measure on raw features instead of standardized ones.
    #[arg(long)]
    pub no_standardize: bool,
}

/// Options shared by `benchmark` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    /// Comma-separated variants (default: all).
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,

    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,

    #[arg(long, value_enum)]
    pub priority_order: Option<OrderArg>,

    /// Exclude datasets whose N1 does not exceed this value.
    #[arg(long)]
    pub n1_threshold: Option<f64>,

    #[arg(long)]
    pub max_iterations: Option<usize>,

    /// Report directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// JSON manifest listing the datasets.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(flatten)]
    pub protocol: ProtocolArgs,

    /// Comma-separated seeds; overrides `--seed`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,

    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub protocol: ProtocolArgs,

    /// minority_f1 or accuracy.
    #[arg(long)]
    pub objective: Option<String>,

    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long)]
    pub repeats: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
}

/// Values read from `--config`. Every field is optional and is overridden
/// by the corresponding flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub label_column: Option<String>,
    pub positive_label: Option<String>,
    pub missing: Option<MissingArg>,
    pub encoding: Option<EncodingArg>,
    pub variant: Option<String>,
    pub variants: Option<Vec<String>>,
    pub kernel: Option<KernelArg>,
    #[serde(alias = "C")]
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub nu: Option<f64>,
    pub degree: Option<u32>,
    pub coef0: Option<f64>,
    pub weights: Option<String>,
    pub priority_order: Option<OrderArg>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub repeats: Option<usize>,
    pub objective: Option<String>,
    pub test_ratio: Option<f64>,
    pub n1_threshold: Option<f64>,
    pub out: Option<PathBuf>,
}
