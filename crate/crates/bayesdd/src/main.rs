use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bayesdd::config::{DataFormat, DatasetConfig, RunConfig, Sigma};
use bayesdd::core::{Matrix, MethodTag};
use bayesdd::data::{make_one_class_split, write_csv, write_manifest, Dataset, LabelColumn, Standardizer};
use bayesdd::error::{Category, Error, Result};
use bayesdd::eval::{
    cell_seed, cv_seed, evaluate, outlier_ratio_sweep, prepare, run_benchmark, train_method, write_benchmark_csv,
    write_json, write_sweep_csv, RankingResult,
};
use bayesdd::model_io::{load_model, save_model, ModelDocument};
use bayesdd::synth::{generate, Shape};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Writes a line to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "bayesdd", version, about = "Kernel one-class learners: SVDD, BDD, SSDD and the ML baseline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write it as JSON.
    Train(TrainArgs),
    /// Score and rank rows with a saved model.
    Score(ScoreArgs),
    /// Repeated one-class benchmark over datasets and methods.
    Benchmark(BenchmarkArgs),
    /// Precision as the outlier share of the test set grows.
    Sweep(SweepArgs),
    /// Write a synthetic 2-D dataset.
    Synth(SynthArgs),
}

#[derive(Args, Default)]
struct DataArgs {
    /// Data file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<DataFormat>,
    /// Label column: zero-based index, header name or "last".
    #[arg(long)]
    label_column: Option<String>,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    target_class: Option<String>,
    /// Kernel bandwidth, or "cv" for cross-validation.
    #[arg(long)]
    sigma: Option<Sigma>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    graph_k: Option<usize>,
    #[arg(long)]
    graph_bandwidth: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Use the graph-Laplacian prior precision for SSDD.
    #[arg(long)]
    laplacian_precision: bool,
    #[arg(long)]
    unlabeled_fraction: Option<f64>,
    /// Skip z-scoring of features.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    folds: Option<usize>,
    /// Output directory; beats BAYESDD_OUTPUT_DIR, which beats the config file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_method)]
    method: Option<MethodTag>,
    /// Unlabeled rows for SSDD when training without a target class.
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    /// Model file; defaults to model.json in the output directory.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset files (CSV, label in the last column); repeatable.
    #[arg(long = "data")]
    data: Vec<PathBuf>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<MethodTag>>,
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<MethodTag>>,
    /// Comma-separated outlier shares of the test set.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Number of seeds.
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    shape: Shape,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; defaults to <shape>.csv in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<MethodTag, String> {
    MethodTag::parse(s).ok_or_else(|| format!("unknown method `{s}`; expected svdd, bdd, ssdd or ml"))
}

fn parse_format(s: &str) -> std::result::Result<DataFormat, String> {
    match s {
        "csv" => Ok(DataFormat::Csv),
        "libsvm" => Ok(DataFormat::Libsvm),
        _ => Err(format!("unknown format `{s}`; expected csv or libsvm")),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut c = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &common.target_class {
        c.target_class = Some(v.clone());
    }
    if let Some(v) = common.sigma {
        c.sigma = v;
    }
    if let Some(v) = common.nu {
        c.nu = v;
    }
    if let Some(v) = common.seed {
        c.seed = v;
    }
    if let Some(v) = common.graph_k {
        c.graph_k = v;
    }
    if let Some(v) = common.graph_bandwidth {
        c.graph_bandwidth = Some(v);
    }
    if let Some(v) = common.epsilon {
        c.epsilon = v;
    }
    if common.laplacian_precision {
        c.use_laplacian_precision = true;
    }
    if let Some(v) = common.unlabeled_fraction {
        c.unlabeled_fraction = Some(v);
    }
    if common.no_standardize {
        c.standardize = false;
    }
    if let Some(v) = common.folds {
        c.folds = v;
    }
    if let Some(v) = &common.output_dir {
        c.output_dir = Some(v.clone());
    }
    Ok(c)
}

/// Merges data flags into an optional configured dataset.
fn merge_dataset(base: Option<DatasetConfig>, args: &DataArgs) -> Option<DatasetConfig> {
    let mut d = match (base, &args.data) {
        (_, Some(p)) => DatasetConfig::csv(p),
        (Some(d), None) => d,
        (None, None) => return None,
    };
    if let Some(f) = args.format {
        d.format = f;
    }
    if let Some(l) = &args.label_column {
        d.label_column = if l == "none" { None } else { Some(LabelColumn::parse(l)) };
    }
    if args.no_header {
        d.has_header = false;
    }
    Some(d)
}

fn output_dir(config: &RunConfig, flag: Option<&PathBuf>) -> Result<PathBuf> {
    let dir = match flag {
        Some(d) => d.clone(),
        None => config.resolved_output_dir(),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

#[derive(Serialize)]
struct TrainReport {
    method: MethodTag,
    sigma: f64,
    nu: f64,
    training_rows: usize,
    unlabeled_rows: usize,
    support_vectors: usize,
    iterations: Option<usize>,
    kkt_residual: Option<f64>,
    objective: Option<f64>,
    converged: bool,
    wall_time_secs: f64,
    target_class: Option<String>,
    test_rows: Option<usize>,
    precision_at_k: Option<f64>,
    model_path: PathBuf,
    config: serde_json::Value,
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode> {
    let mut config = load_config(&args.common)?;
    if let Some(m) = args.method {
        config.method = m;
    }
    config.dataset = merge_dataset(config.dataset.take(), &args.data);
    if let Some(u) = &args.unlabeled {
        config.unlabeled = Some(DatasetConfig {
            label_column: None,
            ..DatasetConfig::csv(u)
        });
    }
    if let Some(m) = &args.model {
        config.model_path = Some(m.clone());
    }
    let method = config.method;
    config.validate(&[method])?;
    let dataset_config = config
        .dataset
        .clone()
        .ok_or_else(|| Error::config("dataset", "a data file is required (--data or config `dataset`)"))?;
    let dataset = dataset_config.load()?;

    let out_dir = output_dir(&config, args.common.output_dir.as_ref())?;
    let model_path = match &config.model_path {
        Some(p) => p.clone(),
        None => out_dir.join("model.json"),
    };

    let fraction = config.effective_unlabeled_fraction(&[method]);
    let protocol = config.protocol(&[method]);
    let (train, unlabeled, test, standardizer, seed) = match &config.target_class {
        Some(class) => {
            let class_index = dataset
                .classes()
                .iter()
                .position(|c| c == class)
                .ok_or_else(|| Error::config("target_class", format!("class `{class}` not in dataset")))?;
            let seed = cell_seed(config.seed, 0, class_index, 0);
            let split = make_one_class_split(&dataset, class, seed, fraction)?;
            write_manifest(&split.manifest, out_dir.join("split.json"))?;
            let prepared = prepare(&split, config.standardize)?;
            let standardizer = config.standardize.then(|| Standardizer::fit(&split.train_targets));
            (
                prepared.train,
                prepared.unlabeled,
                Some((prepared.test, prepared.is_target)),
                standardizer,
                seed,
            )
        }
        None => {
            let unlabeled_raw = match &config.unlabeled {
                Some(u) => u.load()?.features,
                None => Matrix::zeros(0, dataset.dim()),
            };
            let standardizer = config.standardize.then(|| Standardizer::fit(&dataset.features));
            let (train, unlabeled) = match &standardizer {
                Some(s) => (s.transform(&dataset.features)?, s.transform(&unlabeled_raw)?),
                None => (dataset.features.clone(), unlabeled_raw),
            };
            (train, unlabeled, None, standardizer, config.seed)
        }
    };

    let params = protocol.select_params(method, &train, Some(&unlabeled), cv_seed(seed))?;
    let start = Instant::now();
    let model = train_method(method, params, &train, Some(&unlabeled), &protocol.semi)?;
    let wall_time_secs = start.elapsed().as_secs_f64();
    let precision = match &test {
        Some((x, is_target)) => Some(evaluate(&model, x, is_target)?),
        None => None,
    };

    let mut doc = ModelDocument::from_model(&model);
    doc.preprocessing = standardizer;
    doc.config = Some(config.to_json_value());
    save_model(&doc, &model_path)?;

    let report = TrainReport {
        method,
        sigma: params.sigma,
        nu: params.nu,
        training_rows: model.len(),
        unlabeled_rows: if method == MethodTag::Ssdd { unlabeled.rows() } else { 0 },
        support_vectors: model.support_indices.len(),
        iterations: model.solver.map(|s| s.iterations),
        kkt_residual: model.solver.map(|s| s.kkt_residual),
        objective: model.solver.map(|s| s.objective),
        converged: model.converged(),
        wall_time_secs,
        target_class: config.target_class.clone(),
        test_rows: test.as_ref().map(|(x, _)| x.rows()),
        precision_at_k: precision,
        model_path: model_path.clone(),
        config: config.to_json_value(),
    };
    write_json(&report, report_path(&model_path))?;
    out!("{}", serde_json::to_string_pretty(&report)?);
    if !model.converged() {
        eprintln!("error: solver did not converge; model and report were written");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn report_path(model_path: &Path) -> PathBuf {
    let stem = model_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    model_path.with_file_name(format!("{stem}.report.json"))
}

/// Loads rows for scoring. Without an explicit label column, a file one
/// column wider than the model treats its last column as the label.
fn load_score_rows(args: &DataArgs, dim: usize) -> Result<Dataset> {
    let path = args
        .data
        .clone()
        .ok_or_else(|| Error::config("data", "a data file is required (--data)"))?;
    let mut cfg = DatasetConfig {
        format: args.format.unwrap_or_default(),
        label_column: match args.label_column.as_deref() {
            None | Some("none") => None,
            Some(l) => Some(LabelColumn::parse(l)),
        },
        has_header: !args.no_header,
        ..DatasetConfig::csv(&path)
    };
    if args.label_column.is_none() && cfg.format == DataFormat::Csv {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&path)
            .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        let width = reader.records().next().and_then(|r| r.ok()).map(|r| r.len());
        if width == Some(dim + 1) {
            cfg.label_column = Some(LabelColumn::Name("last".into()));
        }
    }
    cfg.load()
}

fn cmd_score(args: ScoreArgs) -> Result<ExitCode> {
    let doc = load_model(&args.model)?;
    let dim = doc.train_points.first().map_or(0, Vec::len);
    let data = load_score_rows(&args.data, dim)?;
    let scores = doc.score(&data.features)?;
    let n = scores.len();
    let ranking = RankingResult::new(scores, n);
    let ranks = ranking.ranks();

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let err = |e: csv::Error| Error::Model(e.to_string());
        w.write_record(["index", "score", "rank"]).map_err(err)?;
        for &i in &ranking.order {
            w.write_record([i.to_string(), ranking.scores[i].to_string(), ranks[i].to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Model(e.to_string()))?;
    }
    match &args.out {
        Some(p) => std::fs::write(p, &buf).map_err(|e| Error::io(p, e))?,
        None => std::io::stdout().write_all(&buf).map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct BenchmarkDocument<'a> {
    config: serde_json::Value,
    load_errors: Vec<String>,
    #[serde(flatten)]
    report: &'a bayesdd::eval::BenchmarkReport,
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<ExitCode> {
    let mut config = load_config(&args.common)?;
    if !args.data.is_empty() {
        config.datasets = args.data.iter().map(DatasetConfig::csv).collect();
    }
    if let Some(m) = args.methods {
        config.methods = m;
    }
    if let Some(r) = args.repetitions {
        config.repetitions = r;
    }
    if config.datasets.is_empty() {
        return Err(Error::config("datasets", "at least one dataset is required (--data or config `datasets`)"));
    }
    if config.methods.is_empty() {
        return Err(Error::config("methods", "at least one method is required"));
    }
    config.validate(&config.methods)?;
    let out_dir = output_dir(&config, args.common.output_dir.as_ref())?;

    let mut datasets = Vec::new();
    let mut load_errors = Vec::new();
    let mut failed_rows = Vec::new();
    for d in &config.datasets {
        match d.load() {
            Ok(ds) => datasets.push(ds),
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", d.path.display());
                load_errors.push(e.to_string());
                for &method in &config.methods {
                    failed_rows.push(bayesdd::eval::BenchmarkRow {
                        dataset: d.path.display().to_string(),
                        method,
                        mean_precision: f64::NAN,
                        std_precision: f64::NAN,
                        mean_runtime_secs: f64::NAN,
                        runs: 0,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }
    let mut report = run_benchmark(&datasets, &config.benchmark_options())?;
    report.rows.extend(failed_rows);

    write_benchmark_csv(&report.rows, out_dir.join("benchmark.csv"))?;
    write_json(
        &BenchmarkDocument {
            config: config.to_json_value(),
            load_errors,
            report: &report,
        },
        out_dir.join("benchmark.json"),
    )?;
    out!("{:<12} {:<6} {:>10} {:>8} {:>12} {:>5}", "dataset", "method", "precision", "std", "train_secs", "runs");
    for r in &report.rows {
        match &r.error {
            None => out!(
                "{:<12} {:<6} {:>10.4} {:>8.4} {:>12.6} {:>5}",
                r.dataset, r.method, r.mean_precision, r.std_precision, r.mean_runtime_secs, r.runs
            ),
            Some(e) => out!("{:<12} {:<6} error: {e}", r.dataset, r.method),
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    config: serde_json::Value,
    #[serde(flatten)]
    report: &'a bayesdd::eval::SweepReport,
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut config = load_config(&args.common)?;
    config.dataset = merge_dataset(config.dataset.take(), &args.data);
    if let Some(m) = args.methods {
        config.methods = m;
    }
    if let Some(r) = args.ratios {
        config.ratios = r;
    }
    if let Some(r) = args.repetitions {
        config.repetitions = r;
    }
    config.validate(&config.methods)?;
    let dataset = config
        .dataset
        .clone()
        .ok_or_else(|| Error::config("dataset", "a data file is required (--data or config `dataset`)"))?
        .load()?;
    let out_dir = output_dir(&config, args.common.output_dir.as_ref())?;
    let report = outlier_ratio_sweep(&dataset, &config.sweep_options())?;
    write_sweep_csv(&report.points, out_dir.join("sweep.csv"))?;
    write_json(
        &SweepDocument {
            config: config.to_json_value(),
            report: &report,
        },
        out_dir.join("sweep.json"),
    )?;
    out!("{:>6} {:<6} {:>10}", "ratio", "method", "precision");
    for s in &report.summary {
        out!("{:>6} {:<6} {:>10.4}", s.ratio, s.method, s.mean_precision);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode> {
    let dataset = generate(args.shape, args.n, args.noise, args.seed)?;
    let path = match args.out {
        Some(p) => p,
        None => {
            let config = RunConfig {
                output_dir: args.output_dir.clone(),
                ..RunConfig::default()
            };
            output_dir(&config, args.output_dir.as_ref())?.join(format!("{}.csv", args.shape.as_str()))
        }
    };
    write_csv(&dataset, &path)?;
    out!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> ExitCode {
    match e.category() {
        Category::Config => ExitCode::from(2),
        Category::Data => ExitCode::from(3),
        Category::Solver => ExitCode::from(4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Score(a) => cmd_score(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
