//! End-to-end comparison of variants over a manifest of CSV datasets.
//!
//! For every dataset and seed: a stratified 80/20 train/test split, a
//! further stratified 80/20 fit/validation split of the training part for
//! the grid search, standardization fitted on the data each model is trained
//! on, a refit of the best cell on the whole training part, and test-set
//! metrics, timings and support-vector counts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::complexity::{fraction_borderline, Distance};
use crate::data::{class_weights, load_csv, standardize, stratified_split, Dataset, LoadOptions, Scaler};
use crate::error::{Error, Result};
use crate::evaluation::grid::{grid_search, CellParams, GridRow, Objective, ParamGrid};
use crate::evaluation::metrics::{confusion_metrics, MetricsReport};
use crate::evaluation::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::kernels::KernelSpec;
use crate::qp_solver::SolverSettings;
use crate::scalar::Scalar;
use crate::svm::{fit, PriorityOrder, SvmModel, TrainConfig, Variant};

/// Version of the serialized [`BenchmarkReport`] layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One dataset of a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Display name; the file stem when absent.
    #[serde(default)]
    pub name: Option<String>,
    /// CSV path, relative to the manifest file unless absolute.
    pub path: PathBuf,
    #[serde(flatten)]
    pub options: LoadOptions,
    #[serde(default)]
    pub objective: Objective,
}

impl ManifestEntry {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.path.display().to_string())
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub datasets: Vec<ManifestEntry>,
}

impl Manifest {
    /// Reads a JSON manifest and resolves dataset paths against its folder.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut manifest: Manifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for entry in &mut manifest.datasets {
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
        }
        Ok(manifest)
    }
}

/// Protocol parameters shared by every dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct BenchmarkSettings<F> {
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    /// Kernel family; `γ` is replaced by the grid values.
    pub kernel: KernelSpec<F>,
    pub grid: ParamGrid<F>,
    pub test_ratio: f64,
    pub validation_ratio: f64,
    /// Number of timed single-row predictions (at least 100 are taken).
    pub timing_repeats: usize,
    /// Datasets whose N1 does not exceed this value are excluded.
    pub n1_threshold: Option<f64>,
    pub priority_order: PriorityOrder,
    pub solver: SolverSettings<F>,
}

impl<F: Scalar> Default for BenchmarkSettings<F> {
    fn default() -> Self {
        BenchmarkSettings {
            variants: Variant::ALL.to_vec(),
            seeds: vec![42],
            kernel: KernelSpec::rbf(F::one()),
            grid: ParamGrid::default(),
            test_ratio: 0.2,
            validation_ratio: 0.2,
            timing_repeats: 100,
            n1_threshold: None,
            priority_order: PriorityOrder::Descending,
            solver: SolverSettings::training(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One dataset × variant × seed result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub dataset: String,
    pub variant: Variant,
    pub seed: u64,
    pub status: RowStatus,
    pub error: Option<String>,
    pub objective: Objective,
    pub best_params: Option<CellParams>,
    pub validation_score: Option<f64>,
    pub test_score: Option<f64>,
    pub test_metrics: Option<MetricsReport>,
    pub n_train: usize,
    pub n_support: Option<usize>,
    /// Support vectors as a percentage of the training rows.
    pub sv_percent: Option<f64>,
    /// Wall-clock seconds of the final fit.
    pub train_time_s: Option<f64>,
    /// Median wall-clock seconds of a single-row prediction.
    pub predict_time_per_sample_s: Option<f64>,
    pub grid: Vec<GridRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub path: PathBuf,
    pub n_samples: Option<usize>,
    pub n_features: Option<usize>,
    pub n_positive: Option<usize>,
    /// Fraction of borderline points on standardized features.
    pub n1: Option<f64>,
    pub excluded: bool,
    pub error: Option<String>,
}

/// Wilcoxon comparison of the reference variant against one other variant
/// over the datasets where both have a score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonRow {
    pub reference: Variant,
    pub baseline: Variant,
    pub n_datasets: usize,
    pub result: Option<WilcoxonResult>,
    /// `p < 0.05`.
    pub significant: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub datasets: Vec<DatasetInfo>,
    pub rows: Vec<ModelRow>,
    /// Dataset order of the score vectors.
    pub score_datasets: Vec<String>,
    /// Per variant, the mean test score over seeds of each dataset; `None`
    /// where every seed failed.
    pub paired_scores: BTreeMap<Variant, Vec<Option<f64>>>,
    pub wilcoxon: Vec<WilcoxonRow>,
}

impl BenchmarkReport {
    /// True when no model row succeeded.
    pub fn all_failed(&self) -> bool {
        !self.rows.iter().any(|r| r.status == RowStatus::Ok)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json`, `metrics.csv`, `timing.csv` and `wilcoxon.csv`
    /// into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        self.write_metrics_csv(dir.join("metrics.csv"))?;
        self.write_timing_csv(dir.join("timing.csv"))?;
        self.write_wilcoxon_csv(dir.join("wilcoxon.csv"))?;
        Ok(())
    }

    fn write_metrics_csv(&self, path: PathBuf) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "dataset",
            "variant",
            "seed",
            "status",
            "objective",
            "C",
            "nu",
            "gamma",
            "validation_score",
            "test_score",
            "accuracy",
            "minority_precision",
            "minority_recall",
            "minority_f1",
            "macro_precision",
            "macro_recall",
            "macro_f1",
        ])?;
        for r in &self.rows {
            let m = r.test_metrics.as_ref();
            let pos = m.map(|m| m.per_class[&1]);
            let p = r.best_params;
            w.write_record([
                r.dataset.clone(),
                r.variant.to_string(),
                r.seed.to_string(),
                status_name(r.status).into(),
                r.objective.name().into(),
                cell(p.and_then(|p| p.c)),
                cell(p.and_then(|p| p.nu)),
                cell(p.and_then(|p| p.gamma)),
                cell(r.validation_score),
                cell(r.test_score),
                cell(m.map(|m| m.accuracy)),
                cell(pos.map(|c| c.precision)),
                cell(pos.map(|c| c.recall)),
                cell(pos.map(|c| c.f1)),
                cell(m.map(|m| m.macro_avg.precision)),
                cell(m.map(|m| m.macro_avg.recall)),
                cell(m.map(|m| m.macro_avg.f1)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_timing_csv(&self, path: PathBuf) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "dataset",
            "variant",
            "seed",
            "status",
            "train_time_s",
            "predict_time_per_sample_s",
            "n_support",
            "n_train",
            "sv_percent",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.variant.to_string(),
                r.seed.to_string(),
                status_name(r.status).into(),
                cell(r.train_time_s),
                cell(r.predict_time_per_sample_s),
                r.n_support.map(|n| n.to_string()).unwrap_or_default(),
                r.n_train.to_string(),
                cell(r.sv_percent),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_wilcoxon_csv(&self, path: PathBuf) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "reference",
            "baseline",
            "n_datasets",
            "statistic",
            "p_value",
            "method",
            "significant",
            "error",
        ])?;
        for r in &self.wilcoxon {
            let res = r.result.as_ref();
            w.write_record([
                r.reference.to_string(),
                r.baseline.to_string(),
                r.n_datasets.to_string(),
                cell(res.map(|x| x.statistic)),
                cell(res.map(|x| x.p_value)),
                res.map(|x| serde_json::to_value(x.method).unwrap_or_default())
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                r.significant.map(|s| s.to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn status_name(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Ok => "ok",
        RowStatus::Failed => "failed",
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Median wall-clock time of single-row predictions, cycling over `x`.
pub fn per_sample_predict_time<F: Scalar>(model: &SvmModel<F>, x: &Dataset<F>, repeats: usize) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyDataset("no rows to time predictions on".into()));
    }
    let mut times = Vec::with_capacity(repeats);
    for k in 0..repeats {
        let row = x.features.row(k % x.len());
        let start = Instant::now();
        let label = model.predict_one(row)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(label);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    })
}

/// Configuration template of `variant` before the grid fills in `C`/`ν`/`γ`.
fn base_config<F: Scalar>(
    variant: Variant,
    train: &Dataset<F>,
    objective: Objective,
    settings: &BenchmarkSettings<F>,
) -> Result<TrainConfig<F>> {
    let mut cfg = TrainConfig::new(variant, settings.kernel);
    cfg.solver = settings.solver;
    cfg.priority_order = settings.priority_order;
    match variant {
        Variant::SoftMargin => {}
        Variant::Weighted => cfg.class_weights = Some(class_weights(train)?),
        Variant::NuSvc => cfg.nu = Some(F::lit(0.5)),
        // cost-sensitive priorities only when the minority class is the target
        Variant::Proposed => {
            if objective == Objective::MinorityF1 {
                cfg.class_weights = Some(class_weights(train)?);
            }
        }
    }
    Ok(cfg)
}

struct Fitted<F> {
    model: SvmModel<F>,
    grid: Vec<GridRow>,
    best_params: CellParams,
    validation_score: f64,
    train_time: f64,
}

fn tune_and_fit<F: Scalar>(
    variant: Variant,
    train: &Dataset<F>,
    objective: Objective,
    seed: u64,
    settings: &BenchmarkSettings<F>,
) -> Result<Fitted<F>> {
    let (fit_part, val_part) = stratified_split(train, 1.0 - settings.validation_ratio, seed)?;
    let (fit_part, val_part, _) = standardize(&fit_part, &val_part)?;
    let base = base_config(variant, &fit_part, objective, settings)?;
    let search = grid_search(&fit_part, &val_part, &base, &settings.grid, objective)?;

    let mut best = search.best_params.clone();
    if best.class_weights.is_some() {
        best.class_weights = Some(class_weights(train)?);
    }
    let start = Instant::now();
    let model = fit(train, &best)?;
    let train_time = start.elapsed().as_secs_f64();
    let best_params = CellParams::of(&search.best_params);
    Ok(Fitted {
        model,
        grid: search.table,
        best_params,
        validation_score: search.best_score,
        train_time,
    })
}

/// N1 of the dataset after standardizing every feature.
fn standardized_n1<F: Scalar>(d: &Dataset<F>) -> Result<f64> {
    let scaler = Scaler::fit(&d.features);
    let scaled = d.with_features(scaler.transform(&d.features)?);
    Ok(fraction_borderline(&scaled, Distance::Euclidean).n1)
}

fn run_variant<F: Scalar>(
    name: &str,
    variant: Variant,
    seed: u64,
    objective: Objective,
    train: &Dataset<F>,
    test: &Dataset<F>,
    settings: &BenchmarkSettings<F>,
) -> ModelRow {
    let mut row = empty_row(name, variant, seed, objective, train.len());
    let outcome = (|| -> Result<()> {
        let fitted = tune_and_fit(variant, train, objective, seed, settings)?;
        let pred = fitted.model.predict(&test.features)?;
        let metrics = confusion_metrics(&test.labels, &pred)?;
        let repeats = settings.timing_repeats.max(100);
        row.predict_time_per_sample_s = Some(per_sample_predict_time(&fitted.model, test, repeats)?);
        row.test_score = Some(objective.score(&test.labels, &pred)?);
        row.test_metrics = Some(metrics);
        row.n_support = Some(fitted.model.n_support());
        row.sv_percent = Some(100.0 * fitted.model.n_support() as f64 / train.len() as f64);
        row.train_time_s = Some(fitted.train_time);
        row.best_params = Some(fitted.best_params);
        row.validation_score = Some(fitted.validation_score);
        row.grid = fitted.grid;
        Ok(())
    })();
    match outcome {
        Ok(()) => row.status = RowStatus::Ok,
        Err(e) => {
            log::warn!("{name} / {variant} / seed {seed}: {e}");
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Runs the protocol over every manifest dataset, variant and seed.
/// Failures are recorded in the report and never abort the run.
pub fn benchmark_run<F: Scalar>(manifest: &Manifest, settings: &BenchmarkSettings<F>) -> Result<BenchmarkReport> {
    if settings.variants.is_empty() || settings.seeds.is_empty() {
        return Err(Error::InvalidInput("at least one variant and one seed are required".into()));
    }
    let mut datasets = Vec::new();
    let mut rows = Vec::new();
    let mut score_datasets = Vec::new();
    let mut paired_scores: BTreeMap<Variant, Vec<Option<f64>>> =
        settings.variants.iter().map(|&v| (v, Vec::new())).collect();

    for entry in &manifest.datasets {
        let name = entry.display_name();
        let mut info = DatasetInfo {
            name: name.clone(),
            path: entry.path.clone(),
            n_samples: None,
            n_features: None,
            n_positive: None,
            n1: None,
            excluded: false,
            error: None,
        };
        let data: Dataset<F> = match load_csv(&entry.path, &entry.options) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("{name}: {e}");
                info.error = Some(e.to_string());
                datasets.push(info);
                continue;
            }
        };
        info.n_samples = Some(data.len());
        info.n_features = Some(data.dim());
        info.n_positive = Some(data.count(1));
        match standardized_n1(&data) {
            Ok(n1) => info.n1 = Some(n1),
            Err(e) => info.error = Some(e.to_string()),
        }
        if let (Some(threshold), Some(n1)) = (settings.n1_threshold, info.n1) {
            if n1 <= threshold {
                log::info!("{name}: excluded, N1 = {n1} <= {threshold}");
                info.excluded = true;
                datasets.push(info);
                continue;
            }
        }

        let mut per_variant: BTreeMap<Variant, Vec<f64>> = BTreeMap::new();
        for &seed in &settings.seeds {
            let split = stratified_split(&data, 1.0 - settings.test_ratio, seed)
                .and_then(|(train, test)| standardize(&train, &test));
            let (train, test, _) = match split {
                Ok(s) => s,
                Err(e) => {
                    for &variant in &settings.variants {
                        let mut row = empty_row(&name, variant, seed, entry.objective, 0);
                        row.error = Some(e.to_string());
                        rows.push(row);
                    }
                    continue;
                }
            };
            for &variant in &settings.variants {
                let row = run_variant(&name, variant, seed, entry.objective, &train, &test, settings);
                if let Some(score) = row.test_score {
                    per_variant.entry(variant).or_default().push(score);
                }
                rows.push(row);
            }
        }
        score_datasets.push(name);
        for (&variant, scores) in paired_scores.iter_mut() {
            let mean = per_variant
                .get(&variant)
                .filter(|s| s.len() == settings.seeds.len())
                .map(|s| s.iter().sum::<f64>() / s.len() as f64);
            scores.push(mean);
        }
        datasets.push(info);
    }

    let reference = if settings.variants.contains(&Variant::Proposed) {
        Variant::Proposed
    } else {
        settings.variants[0]
    };
    let wilcoxon = settings
        .variants
        .iter()
        .filter(|&&v| v != reference)
        .map(|&baseline| compare(reference, baseline, &paired_scores))
        .collect();

    Ok(BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seeds: settings.seeds.clone(),
        variants: settings.variants.clone(),
        datasets,
        rows,
        score_datasets,
        paired_scores,
        wilcoxon,
    })
}

fn empty_row(name: &str, variant: Variant, seed: u64, objective: Objective, n_train: usize) -> ModelRow {
    ModelRow {
        dataset: name.to_string(),
        variant,
        seed,
        status: RowStatus::Failed,
        error: None,
        objective,
        best_params: None,
        validation_score: None,
        test_score: None,
        test_metrics: None,
        n_train,
        n_support: None,
        sv_percent: None,
        train_time_s: None,
        predict_time_per_sample_s: None,
        grid: Vec::new(),
    }
}

fn compare(reference: Variant, baseline: Variant, scores: &BTreeMap<Variant, Vec<Option<f64>>>) -> WilcoxonRow {
    let (a, b): (Vec<f64>, Vec<f64>) = scores[&reference]
        .iter()
        .zip(&scores[&baseline])
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip();
    let mut row = WilcoxonRow {
        reference,
        baseline,
        n_datasets: a.len(),
        result: None,
        significant: None,
        error: None,
    };
    match wilcoxon_signed_rank(&a, &b) {
        Ok(r) => {
            row.significant = Some(r.p_value < 0.05);
            row.result = Some(r);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}
