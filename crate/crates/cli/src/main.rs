mod args;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use bsvm::complexity::{fraction_borderline, Distance};
use bsvm::data::{load_csv_with_schema, read_features, stratified_split, Scaler};
use bsvm::decomposition::{run_decomposition, write_trace_jsonl};
use bsvm::evaluation::{
    benchmark_run, confusion_metrics, wilcoxon_signed_rank, BenchmarkReport, BenchmarkSettings, Manifest,
    ManifestEntry, Objective,
};
use bsvm::kernels::default_gamma;
use bsvm::{
    class_weights, fit, ClassWeights, Dataset, EncodingPolicy, Error, KernelSpec, LoadOptions, MissingPolicy,
    ModelDocument, PriorityOrder, TrainConfig, Variant,
};

use args::{
    BenchmarkArgs, Cli, Command, CompareArgs, ComplexityArgs, DataArgs, EncodingArg, FileConfig, KernelArg,
    MissingArg, ModelArgs, OrderArg, PredictArgs, ProtocolArgs, TrainArgs,
};

const DEFAULT_SEED: u64 = 42;
const DEFAULT_REPEATS: usize = 10;

/// A failed command and the exit status it maps to.
enum Failure {
    Usage(String),
    Lib(Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Lib(Error::InvalidInput(_)) => 1,
            Failure::Lib(e) if e.is_solver_error() => 3,
            Failure::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Json(e))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose, cli.quiet);
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

/// Caps the worker pool at `BSVM_THREADS` when set.
fn init_threads() -> Outcome<()> {
    let Ok(value) = std::env::var("BSVM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("BSVM_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Outcome<()> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Train(a) => cmd_train(a, &file),
        Command::Predict(a) => cmd_predict(a),
        Command::Complexity(a) => cmd_complexity(a, &file),
        Command::Benchmark(a) => cmd_benchmark(a, &file),
        Command::Compare(a) => cmd_compare(a, &file),
    }
}

fn load_options(args: &DataArgs, file: &FileConfig) -> LoadOptions {
    LoadOptions {
        label_column: args.label_column.clone().or_else(|| file.label_column.clone()),
        positive_label: args.positive_label.clone().or_else(|| file.positive_label.clone()),
        missing_policy: match args.missing.or(file.missing) {
            Some(MissingArg::Impute) => MissingPolicy::Impute,
            _ => MissingPolicy::Drop,
        },
        encoding_policy: match args.encoding.or(file.encoding) {
            Some(EncodingArg::Strict) => EncodingPolicy::Strict,
            _ => EncodingPolicy::Onehot,
        },
        delimiter: ',',
    }
}

fn data_path(args: &DataArgs, file: &FileConfig) -> Outcome<PathBuf> {
    args.data
        .clone()
        .or_else(|| file.data.clone())
        .ok_or_else(|| Failure::Usage("--data is required".into()))
}

fn parse_variant(name: &str) -> Outcome<Variant> {
    name.parse()
        .map_err(|_| Failure::Usage(format!("unknown variant {name:?}; expected soft_margin, weighted, nu_svc or proposed")))
}

fn priority(order: Option<OrderArg>) -> PriorityOrder {
    match order {
        Some(OrderArg::Asc) => PriorityOrder::Ascending,
        _ => PriorityOrder::Descending,
    }
}

/// Parses `auto` or a map like `+1:2,-1:0.5` (`=` also accepted).
fn parse_weights(spec: &str, train: &Dataset<f64>) -> Outcome<ClassWeights<f64>> {
    if spec.trim() == "auto" {
        return Ok(class_weights(train)?);
    }
    let bad = || Failure::Usage(format!("invalid --weights {spec:?}; expected auto or +1:<w>,-1:<w>"));
    let mut weights = ClassWeights::uniform();
    let mut seen = (false, false);
    for part in spec.split(',') {
        let (key, value) = part.split_once([':', '=']).ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        match key.trim() {
            "+1" | "1" | "pos" | "positive" => {
                weights.positive = value;
                seen.0 = true;
            }
            "-1" | "neg" | "negative" => {
                weights.negative = value;
                seen.1 = true;
            }
            _ => return Err(bad()),
        }
    }
    if !(seen.0 && seen.1) {
        return Err(bad());
    }
    Ok(weights)
}

fn kernel_spec(args: &ModelArgs, file: &FileConfig, train: &Dataset<f64>) -> KernelSpec<f64> {
    let gamma = args.gamma.or(file.gamma).unwrap_or_else(|| default_gamma(&train.features));
    match args.kernel.or(file.kernel).unwrap_or(KernelArg::Rbf) {
        KernelArg::Linear => KernelSpec::linear(),
        KernelArg::Rbf => KernelSpec::rbf(gamma),
        KernelArg::Polynomial => KernelSpec::polynomial(
            gamma,
            args.degree.or(file.degree).unwrap_or(3),
            args.coef0.or(file.coef0).unwrap_or(0.0),
        ),
    }
}

fn train_config(args: &ModelArgs, file: &FileConfig, train: &Dataset<f64>) -> Outcome<TrainConfig<f64>> {
    let variant = parse_variant(args.variant.as_deref().or(file.variant.as_deref()).unwrap_or("proposed"))?;
    let mut cfg = TrainConfig::new(variant, kernel_spec(args, file, train));
    cfg.c = args.c.or(file.c).unwrap_or(1.0);
    cfg.priority_order = priority(args.priority_order.or(file.priority_order));
    if let Some(tol) = args.tolerance.or(file.tolerance) {
        cfg.solver.kkt_tolerance = tol;
    }
    if let Some(cap) = args.max_iterations.or(file.max_iterations) {
        cfg.solver.max_iterations = cap;
    }
    let nu = args.nu.or(file.nu);
    if variant == Variant::NuSvc {
        cfg.nu = Some(nu.unwrap_or(0.5));
    } else if nu.is_some() {
        return Err(Failure::Usage(format!("--nu only applies to nu_svc, not {variant}")));
    }
    let weights = args.weights.as_deref().or(file.weights.as_deref());
    cfg.class_weights = match (variant, weights) {
        (Variant::Weighted, None) => Some(class_weights(train)?),
        (_, Some(spec)) => Some(parse_weights(spec, train)?),
        (_, None) => None,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs, file: &FileConfig) -> Outcome<()> {
    let path = data_path(&args.data, file)?;
    let options = load_options(&args.data, file);
    let (dataset, schema) = load_csv_with_schema::<f64>(&path, &options)?;
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);

    let (train, test) = match args.test_ratio.or(file.test_ratio) {
        Some(r) => {
            let (train, test) = stratified_split(&dataset, 1.0 - r, seed)?;
            (train, Some(test))
        }
        None => (dataset, None),
    };
    let scaler = (!args.no_standardize).then(|| Scaler::fit(&train.features));
    let scale = |d: &Dataset<f64>| -> Outcome<Dataset<f64>> {
        Ok(match &scaler {
            Some(s) => d.with_features(s.transform(&d.features)?),
            None => d.clone(),
        })
    };
    let train = scale(&train)?;
    let test = test.as_ref().map(scale).transpose()?;
    let config = train_config(&args.model, file, &train)?;

    let start = Instant::now();
    let model = if config.variant == Variant::Proposed {
        let (mut model, trace) = run_decomposition(&train, &config)?;
        model.meta.train_time = start.elapsed().as_secs_f64();
        if let Some(trace_path) = args.trace.as_ref() {
            write_trace_jsonl(&trace, BufWriter::new(File::create(trace_path)?))?;
        }
        model
    } else {
        fit(&train, &config)?
    };

    let train_metrics = confusion_metrics(&train.labels, &model.predict(&train.features)?)?;
    let test_metrics = match &test {
        Some(t) => Some(confusion_metrics(&t.labels, &model.predict(&t.features)?)?),
        None => None,
    };
    let summary = json!({
        "variant": config.variant,
        "n_train": train.len(),
        "n_support": model.n_support(),
        "converged": model.meta.converged,
        "train_time_s": model.meta.train_time,
        "positive_label": train.positive_label_name,
        "train_metrics": train_metrics,
        "test_metrics": test_metrics,
    });

    let mut doc = ModelDocument::new(model);
    doc.schema = Some(schema);
    doc.scaler = scaler;
    if let Some(out) = args.out.as_ref().or(file.out.as_ref()) {
        doc.save(out)?;
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Outcome<()> {
    let doc = ModelDocument::<f64>::load(&args.model)?;
    let schema = doc
        .schema
        .as_ref()
        .ok_or_else(|| Error::Schema("model file has no input schema".into()))?;
    let (features, _) = read_features::<f64>(&args.data, schema, ',')?;
    let features = match &doc.scaler {
        Some(s) => s.transform(&features)?,
        None => features,
    };
    let values = doc.model.decision_values(&features)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    writeln!(out, "label,decision")?;
    for v in values {
        writeln!(out, "{},{}", bsvm::svm::label_of(v), v)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_complexity(args: ComplexityArgs, file: &FileConfig) -> Outcome<()> {
    let path = data_path(&args.data, file)?;
    let (dataset, _) = load_csv_with_schema::<f64>(&path, &load_options(&args.data, file))?;
    let dataset = if args.no_standardize {
        dataset
    } else {
        let scaler = Scaler::fit(&dataset.features);
        dataset.with_features(scaler.transform(&dataset.features)?)
    };
    let report = fraction_borderline(&dataset, Distance::Euclidean);
    let out = json!({
        "dataset": path.display().to_string(),
        "n_samples": dataset.len(),
        "n_features": dataset.dim(),
        "standardized": !args.no_standardize,
        "n1": report.n1,
        "mst_edge_count": report.mst_edge_count,
        "cross_class_edges": report.cross_class_edges,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn protocol_settings(args: &ProtocolArgs, file: &FileConfig, seeds: Vec<u64>) -> Outcome<BenchmarkSettings<f64>> {
    let mut settings = BenchmarkSettings::<f64>::default();
    if let Some(names) = args.variants.clone().or_else(|| file.variants.clone()) {
        settings.variants = names.iter().map(|n| parse_variant(n.trim())).collect::<Outcome<_>>()?;
    }
    settings.kernel = match args.kernel.or(file.kernel).unwrap_or(KernelArg::Rbf) {
        KernelArg::Linear => KernelSpec::linear(),
        KernelArg::Rbf => KernelSpec::rbf(1.0),
        KernelArg::Polynomial => KernelSpec::polynomial(1.0, file.degree.unwrap_or(3), file.coef0.unwrap_or(0.0)),
    };
    settings.priority_order = priority(args.priority_order.or(file.priority_order));
    settings.n1_threshold = args.n1_threshold.or(file.n1_threshold);
    if let Some(cap) = args.max_iterations.or(file.max_iterations) {
        settings.solver.max_iterations = cap;
    }
    if let Some(tol) = file.tolerance {
        settings.solver.kkt_tolerance = tol;
    }
    settings.seeds = seeds;
    Ok(settings)
}

fn output_dir(args: &ProtocolArgs, file: &FileConfig, default: &str) -> PathBuf {
    args.out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from(default))
}

fn finish_report(report: &BenchmarkReport, dir: &Path) -> Outcome<()> {
    report.write_to_dir(dir)?;
    for d in report.datasets.iter().filter(|d| d.excluded) {
        log::info!("excluded {} (N1 = {:?})", d.name, d.n1);
    }
    if !report.all_failed() {
        return Ok(());
    }
    // a solver failure only if some dataset actually reached the solver
    let error = if report.datasets.iter().any(|d| d.error.is_none() && !d.excluded) {
        Error::AllCellsFailed
    } else if !report.datasets.is_empty() && report.datasets.iter().all(|d| d.excluded) {
        Error::EmptyDataset("every dataset was excluded by the N1 threshold".into())
    } else {
        Error::EmptyDataset("no dataset could be loaded".into())
    };
    Err(Failure::Lib(error))
}

fn cmd_benchmark(args: BenchmarkArgs, file: &FileConfig) -> Outcome<()> {
    let manifest_path = args
        .manifest
        .clone()
        .or_else(|| file.manifest.clone())
        .ok_or_else(|| Failure::Usage("--manifest is required".into()))?;
    let manifest = Manifest::load(&manifest_path)?;
    let seeds = args
        .seeds
        .clone()
        .or_else(|| file.seeds.clone())
        .unwrap_or_else(|| vec![args.seed.or(file.seed).unwrap_or(DEFAULT_SEED)]);
    let settings = protocol_settings(&args.protocol, file, seeds)?;
    let report = benchmark_run(&manifest, &settings)?;
    let dir = output_dir(&args.protocol, file, "benchmark-report");
    finish_report(&report, &dir)?;

    let summary = json!({
        "report_dir": dir.display().to_string(),
        "rows": report.rows.len(),
        "failed_rows": report.rows.iter().filter(|r| r.error.is_some()).count(),
        "excluded": report.datasets.iter().filter(|d| d.excluded).map(|d| &d.name).collect::<Vec<_>>(),
        "wilcoxon": report.wilcoxon,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_compare(args: CompareArgs, file: &FileConfig) -> Outcome<()> {
    let path = data_path(&args.data, file)?;
    let objective: Objective = match args.objective.as_deref().or(file.objective.as_deref()) {
        Some(name) => name.parse().map_err(|_| Failure::Usage(format!("unknown objective {name:?}")))?,
        None => Objective::default(),
    };
    let first = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let repeats = args.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS);
    if repeats == 0 {
        return Err(Failure::Usage("--repeats must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..repeats as u64).map(|k| first + k).collect();
    let manifest = Manifest {
        datasets: vec![ManifestEntry {
            name: None,
            path: path.clone(),
            options: load_options(&args.data, file),
            objective,
        }],
    };
    let settings = protocol_settings(&args.protocol, file, seeds.clone())?;
    let report = benchmark_run(&manifest, &settings)?;
    if let Some(d) = report.datasets.first() {
        if let Some(e) = &d.error {
            return Err(Failure::Lib(Error::Schema(format!("{}: {e}", path.display()))));
        }
    }
    let dir = output_dir(&args.protocol, file, "compare-report");
    finish_report(&report, &dir)?;

    // paired by seed rather than by dataset
    let mut scores: BTreeMap<Variant, Vec<Option<f64>>> = BTreeMap::new();
    for &v in &settings.variants {
        let per_seed = seeds
            .iter()
            .map(|&s| {
                report
                    .rows
                    .iter()
                    .find(|r| r.variant == v && r.seed == s)
                    .and_then(|r| r.test_score)
            })
            .collect();
        scores.insert(v, per_seed);
    }
    let reference = if settings.variants.contains(&Variant::Proposed) {
        Variant::Proposed
    } else {
        settings.variants[0]
    };
    let mut tests = Vec::new();
    for &baseline in settings.variants.iter().filter(|&&v| v != reference) {
        let (a, b): (Vec<f64>, Vec<f64>) = scores[&reference]
            .iter()
            .zip(&scores[&baseline])
            .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
            .unzip();
        let outcome = wilcoxon_signed_rank(&a, &b);
        tests.push(json!({
            "reference": reference,
            "baseline": baseline,
            "n_pairs": a.len(),
            "result": outcome.as_ref().ok(),
            "error": outcome.as_ref().err().map(|e| e.to_string()),
        }));
    }
    let means: BTreeMap<Variant, Option<f64>> = scores
        .iter()
        .map(|(&v, s)| {
            let ok: Vec<f64> = s.iter().flatten().copied().collect();
            (v, (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64))
        })
        .collect();
    let summary = json!({
        "dataset": path.display().to_string(),
        "objective": objective,
        "seeds": seeds,
        "report_dir": dir.display().to_string(),
        "scores": scores,
        "mean_scores": means,
        "wilcoxon": tests,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
