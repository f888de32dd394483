//! Ranking metrics, cross-validated model selection and experiment drivers.

use std::cmp::Ordering;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use bayesdd_core::bdd::{train_bdd_with, train_ml, BddOptions};
use bayesdd_core::ssdd::{train_ssdd, SsddOptions, DEFAULT_EPSILON, DEFAULT_GRAPH_K};
use bayesdd_core::svdd::train_svdd;
use bayesdd_core::{DescriptionModel, KernelSpec, Matrix, MethodTag};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_one_class_split, standardize, Dataset, OneClassSplit};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitRng};

pub const DEFAULT_SIGMA_GRID: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_NU_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_REPETITIONS: usize = 10;

/// Used when a training set is too small to cross-validate.
pub const FALLBACK_PARAMS: MethodParams = MethodParams { sigma: 1.0, nu: 0.5 };

/// Test scores with their ascending order; ties go to the lower index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
    pub k: usize,
}

impl RankingResult {
    pub fn new(scores: Vec<f64>, k: usize) -> Self {
        let order = rank_order(&scores);
        Self { scores, order, k }
    }

    /// One-based rank of each test index.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (r, &i) in self.order.iter().enumerate() {
            ranks[i] = r + 1;
        }
        ranks
    }
}

pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    order
}

pub fn precision_at_k(result: &RankingResult, is_target: &[bool]) -> Result<f64> {
    if is_target.len() != result.scores.len() {
        return Err(bayesdd_core::Error::DimensionMismatch {
            left: result.scores.len(),
            right: is_target.len(),
        }
        .into());
    }
    if result.k == 0 || result.k > result.order.len() {
        return Err(Error::Argument {
            name: "k",
            message: format!("{} is outside 1..={}", result.k, result.order.len()),
        });
    }
    let hits = result.order[..result.k].iter().filter(|&&i| is_target[i]).count();
    Ok(hits as f64 / result.k as f64)
}

/// Scores `test` and returns precision@k with `k` = number of targets.
pub fn evaluate(model: &DescriptionModel, test: &Matrix, is_target: &[bool]) -> Result<f64> {
    let scores = model.score(test)?;
    let k = is_target.iter().filter(|&&t| t).count();
    precision_at_k(&RankingResult::new(scores, k), is_target)
}

/// Kernel bandwidth and ν for one learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub sigma: f64,
    pub nu: f64,
}

/// Graph and prior settings for the semi-supervised learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemiParams {
    pub graph_k: usize,
    pub graph_bandwidth: Option<f64>,
    pub epsilon: f64,
    pub use_laplacian_precision: bool,
}

impl Default for SemiParams {
    fn default() -> Self {
        Self {
            graph_k: DEFAULT_GRAPH_K,
            graph_bandwidth: None,
            epsilon: DEFAULT_EPSILON,
            use_laplacian_precision: false,
        }
    }
}

/// Trains one learner. `unlabeled` is used only by SSDD.
pub fn train_method(
    method: MethodTag,
    params: MethodParams,
    labeled: &Matrix,
    unlabeled: Option<&Matrix>,
    semi: &SemiParams,
) -> Result<DescriptionModel> {
    let kernel = KernelSpec::gaussian(params.sigma)?;
    let model = match method {
        MethodTag::Svdd => train_svdd(labeled, params.nu, kernel)?,
        MethodTag::Bdd => train_bdd_with(labeled, kernel, &BddOptions::new(params.nu))?,
        MethodTag::Ml => train_ml(labeled, kernel)?,
        MethodTag::Ssdd => {
            let empty = Matrix::zeros(0, labeled.cols());
            let options = SsddOptions {
                graph_k: semi.graph_k,
                graph_bandwidth: semi.graph_bandwidth,
                epsilon: semi.epsilon,
                use_laplacian_precision: semi.use_laplacian_precision,
                ..SsddOptions::new(params.nu)
            };
            train_ssdd(labeled, unlabeled.unwrap_or(&empty), kernel, &options)?
        }
    };
    Ok(model)
}

/// Selected parameters and the cross-validated precision behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub params: MethodParams,
    pub precision: f64,
}

/// Grid search by k-fold cross-validation on target-only training data.
///
/// Each fold's held-out targets are ranked among as many background points
/// drawn uniformly from the bounding box of `train_targets`; the cell with
/// the best mean precision@k wins, ties going to larger σ and then larger ν.
/// ML has no ν, so only the largest ν is visited.
pub fn cross_validate(
    method: MethodTag,
    train_targets: &Matrix,
    sigma_grid: &[f64],
    nu_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvOutcome> {
    cross_validate_semi(method, train_targets, None, &SemiParams::default(), sigma_grid, nu_grid, folds, seed)
}

/// [`cross_validate`] with an unlabeled set that stays in every training
/// fold. Only SSDD makes use of it.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate_semi(
    method: MethodTag,
    train_targets: &Matrix,
    unlabeled: Option<&Matrix>,
    semi: &SemiParams,
    sigma_grid: &[f64],
    nu_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let n = train_targets.rows();
    if sigma_grid.is_empty() || nu_grid.is_empty() {
        return Err(Error::Argument {
            name: "grid",
            message: "sigma and nu grids must be non-empty".into(),
        });
    }
    if folds < 2 || folds > n {
        return Err(Error::Argument {
            name: "folds",
            message: format!("{folds} folds cannot split {n} training targets"),
        });
    }
    let nu_grid: Vec<f64> = if method == MethodTag::Ml {
        vec![nu_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max)]
    } else {
        nu_grid.to_vec()
    };

    let mut rng = SplitRng::new(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let (lo, hi) = bounding_box(train_targets);

    struct Fold {
        train: Matrix,
        test: Matrix,
        is_target: Vec<bool>,
    }
    let mut fold_data = Vec::with_capacity(folds);
    for f in 0..folds {
        let held: Vec<usize> = perm.iter().skip(f).step_by(folds).copied().collect();
        let kept: Vec<usize> = perm
            .iter()
            .enumerate()
            .filter(|(pos, _)| pos % folds != f)
            .map(|(_, &i)| i)
            .collect();
        let held_points = train_targets.select_rows(&held);
        let background = uniform_box(&lo, &hi, held.len(), &mut rng);
        // Background first: tied scores then count against the candidate.
        let mut is_target = vec![false; held.len()];
        is_target.extend(std::iter::repeat_n(true, held.len()));
        fold_data.push(Fold {
            train: train_targets.select_rows(&kept),
            test: background.vstack(&held_points)?,
            is_target,
        });
    }

    let mut best: Option<CvOutcome> = None;
    for &sigma in sigma_grid {
        for &nu in &nu_grid {
            let params = MethodParams { sigma, nu };
            let mut total = 0.0;
            for fold in &fold_data {
                let model = train_method(method, params, &fold.train, unlabeled, semi)?;
                total += evaluate(&model, &fold.test, &fold.is_target)?;
            }
            let candidate = CvOutcome {
                params,
                precision: total / folds as f64,
            };
            if best.is_none_or(|b| prefer(&candidate, &b)) {
                best = Some(candidate);
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}

fn prefer(a: &CvOutcome, b: &CvOutcome) -> bool {
    a.precision
        .total_cmp(&b.precision)
        .then(a.params.sigma.total_cmp(&b.params.sigma))
        .then(a.params.nu.total_cmp(&b.params.nu))
        == Ordering::Greater
}

fn bounding_box(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; m.cols()];
    let mut hi = vec![f64::NEG_INFINITY; m.cols()];
    for row in m.row_iter() {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    (lo, hi)
}

/// `count` points uniform in the box `[lo, hi]`.
pub fn uniform_box(lo: &[f64], hi: &[f64], count: usize, rng: &mut SplitRng) -> Matrix {
    let d = lo.len();
    let mut data = Vec::with_capacity(count * d);
    for _ in 0..count {
        for j in 0..d {
            data.push(rng.uniform(lo[j], hi[j]));
        }
    }
    Matrix::from_vec(count, d, data).expect("sized buffer")
}

/// Cross-validation and split settings shared by the benchmark and the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolOptions {
    pub methods: Vec<MethodTag>,
    pub seed: u64,
    pub folds: usize,
    pub sigma_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    /// Skips cross-validation when set.
    pub fixed_params: Option<MethodParams>,
    pub standardize: bool,
    /// Target classes to visit; all classes when `None`.
    pub classes: Option<Vec<String>>,
    pub semi: SemiParams,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            methods: vec![MethodTag::Svdd, MethodTag::Bdd],
            seed: 0,
            folds: DEFAULT_FOLDS,
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            nu_grid: DEFAULT_NU_GRID.to_vec(),
            fixed_params: None,
            standardize: true,
            classes: None,
            semi: SemiParams::default(),
        }
    }
}

impl ProtocolOptions {
    /// Visited classes with their position among all classes of the dataset,
    /// which keys the per-cell seeds.
    fn classes_of(&self, dataset: &Dataset) -> Result<Vec<(usize, String)>> {
        let all = dataset.classes();
        match &self.classes {
            None => Ok(all.into_iter().enumerate().collect()),
            Some(wanted) => wanted
                .iter()
                .map(|c| {
                    all.iter()
                        .position(|a| a == c)
                        .map(|i| (i, c.clone()))
                        .ok_or_else(|| Error::InsufficientTargets {
                            class: c.clone(),
                            found: 0,
                            needed: 2,
                        })
                })
                .collect(),
        }
    }

    /// Picks parameters for `method` on standardized training targets.
    pub fn select_params(&self, method: MethodTag, train: &Matrix, unlabeled: Option<&Matrix>, seed: u64) -> Result<MethodParams> {
        if let Some(p) = self.fixed_params {
            return Ok(p);
        }
        let folds = self.folds.min(train.rows());
        if folds < 2 {
            return Ok(FALLBACK_PARAMS);
        }
        let unlabeled = if method == MethodTag::Ssdd { unlabeled } else { None };
        let cv = cross_validate_semi(
            method,
            train,
            unlabeled,
            &self.semi,
            &self.sigma_grid,
            &self.nu_grid,
            folds,
            seed,
        )?;
        Ok(cv.params)
    }
}

/// A split after standardization with training statistics.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub train: Matrix,
    pub test: Matrix,
    pub unlabeled: Matrix,
    pub is_target: Vec<bool>,
}

pub fn prepare(split: &OneClassSplit, standardize_features: bool) -> Result<PreparedSplit> {
    if !standardize_features {
        return Ok(PreparedSplit {
            train: split.train_targets.clone(),
            test: split.test_features.clone(),
            unlabeled: split.unlabeled_pool.clone(),
            is_target: split.test_is_target.clone(),
        });
    }
    let (train, rest, _) = standardize(&split.train_targets, &[&split.test_features, &split.unlabeled_pool])?;
    let mut rest = rest.into_iter();
    Ok(PreparedSplit {
        train,
        test: rest.next().expect("two matrices"),
        unlabeled: rest.next().expect("two matrices"),
        is_target: split.test_is_target.clone(),
    })
}

/// Cross-validated parameters for each method in one cell.
fn select_all(options: &ProtocolOptions, train: &Matrix, unlabeled: &Matrix, seed: u64) -> Result<Vec<MethodParams>> {
    options
        .methods
        .iter()
        .map(|&m| options.select_params(m, train, Some(unlabeled), seed))
        .collect()
}

/// One (dataset, class, repetition, method) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub target_class: String,
    pub repetition: usize,
    pub method: MethodTag,
    pub precision: f64,
    pub runtime_secs: f64,
    pub sigma: f64,
    pub nu: f64,
    pub support_vectors: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub method: MethodTag,
    pub mean_precision: f64,
    pub std_precision: f64,
    pub mean_runtime_secs: f64,
    pub runs: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkOptions {
    #[serde(flatten)]
    pub protocol: ProtocolOptions,
    pub repetitions: usize,
    /// Share of the training pool moved to the unlabeled set.
    pub unlabeled_fraction: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            protocol: ProtocolOptions::default(),
            repetitions: DEFAULT_REPETITIONS,
            unlabeled_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    pub cells: Vec<CellResult>,
}

impl BenchmarkReport {
    pub fn row(&self, dataset: &str, method: MethodTag) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.method == method)
    }
}

/// Seed of the split in benchmark cell (dataset, class, repetition).
pub fn cell_seed(base: u64, dataset_index: usize, class_index: usize, repetition: usize) -> u64 {
    derive_seed(base, &[dataset_index as u64, class_index as u64, repetition as u64])
}

/// Seed of the cross-validation folds for a split seed.
pub fn cv_seed(split_seed: u64) -> u64 {
    derive_seed(split_seed, &[1])
}

fn run_cell(
    dataset: &Dataset,
    class: &str,
    class_index: usize,
    dataset_index: usize,
    repetition: usize,
    options: &BenchmarkOptions,
) -> Result<Vec<CellResult>> {
    let p = &options.protocol;
    let seed = cell_seed(p.seed, dataset_index, class_index, repetition);
    let split = make_one_class_split(dataset, class, seed, options.unlabeled_fraction)?;
    let prepared = prepare(&split, p.standardize)?;
    let params = select_all(p, &prepared.train, &prepared.unlabeled, cv_seed(seed))?;

    let mut out = Vec::with_capacity(p.methods.len());
    for (&method, &params) in p.methods.iter().zip(&params) {
        let start = Instant::now();
        let model = train_method(method, params, &prepared.train, Some(&prepared.unlabeled), &p.semi)?;
        let runtime_secs = start.elapsed().as_secs_f64();
        let precision = evaluate(&model, &prepared.test, &prepared.is_target)?;
        out.push(CellResult {
            dataset: dataset.name.clone(),
            target_class: class.to_string(),
            repetition,
            method,
            precision,
            runtime_secs,
            sigma: params.sigma,
            nu: params.nu,
            support_vectors: model.support_indices.len(),
            converged: model.converged(),
        });
    }
    Ok(out)
}

/// Mean and unbiased standard deviation; `std` is 0 for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Repeated one-class splits with every class as target in turn.
///
/// A repetition's precision is the mean over target classes; rows report the
/// mean and unbiased std over repetitions. A dataset whose cells fail is
/// reported with its error and contributes no cells.
pub fn run_benchmark(datasets: &[Dataset], options: &BenchmarkOptions) -> Result<BenchmarkReport> {
    if options.repetitions == 0 {
        return Err(Error::Argument {
            name: "repetitions",
            message: "must be at least 1".into(),
        });
    }
    if options.protocol.methods.is_empty() {
        return Err(Error::Argument {
            name: "methods",
            message: "no methods requested".into(),
        });
    }
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (di, dataset) in datasets.iter().enumerate() {
        let results: Result<Vec<Vec<CellResult>>> = options.protocol.classes_of(dataset).and_then(|classes| {
            let jobs: Vec<(usize, usize)> = (0..options.repetitions)
                .flat_map(|r| (0..classes.len()).map(move |c| (r, c)))
                .collect();
            jobs.par_iter()
                .map(|&(r, c)| run_cell(dataset, &classes[c].1, classes[c].0, di, r, options))
                .collect()
        });
        match results {
            Ok(results) => {
                let flat: Vec<CellResult> = results.into_iter().flatten().collect();
                for &method in &options.protocol.methods {
                    let per_rep: Vec<f64> = (0..options.repetitions)
                        .map(|r| {
                            let v: Vec<f64> = flat
                                .iter()
                                .filter(|c| c.method == method && c.repetition == r)
                                .map(|c| c.precision)
                                .collect();
                            v.iter().sum::<f64>() / v.len() as f64
                        })
                        .collect();
                    let times: Vec<f64> = flat.iter().filter(|c| c.method == method).map(|c| c.runtime_secs).collect();
                    let (mean, std) = mean_std(&per_rep);
                    rows.push(BenchmarkRow {
                        dataset: dataset.name.clone(),
                        method,
                        mean_precision: mean,
                        std_precision: std,
                        mean_runtime_secs: mean_std(&times).0,
                        runs: options.repetitions,
                        error: None,
                    });
                }
                cells.extend(flat);
            }
            Err(e) => {
                for &method in &options.protocol.methods {
                    rows.push(BenchmarkRow {
                        dataset: dataset.name.clone(),
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
    Ok(BenchmarkReport { rows, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    #[serde(flatten)]
    pub protocol: ProtocolOptions,
    /// Outlier share of the test set, each in `[0, 1)`.
    pub ratios: Vec<f64>,
    pub seeds: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            protocol: ProtocolOptions::default(),
            ratios: vec![0.1, 0.3, 0.5, 0.7],
            seeds: DEFAULT_REPETITIONS,
        }
    }
}

/// Precision of one method at one ratio for one seed, averaged over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub method: MethodTag,
    pub seed: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub ratio: f64,
    pub method: MethodTag,
    pub mean_precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub summary: Vec<SweepSummary>,
}

impl SweepReport {
    pub fn mean(&self, ratio: f64, method: MethodTag) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.ratio == ratio && s.method == method)
            .map(|s| s.mean_precision)
    }
}

/// Number of outliers giving an outlier share of `ratio` next to `targets`.
fn outliers_for_ratio(ratio: f64, targets: usize) -> usize {
    (ratio * targets as f64 / (1.0 - ratio)).round() as usize
}

/// Evaluates each method as the outlier share of the test set grows.
///
/// Models are trained once per (seed, class); for each ratio a seeded subset
/// of the test outliers is kept, the same subset for every method.
pub fn outlier_ratio_sweep(dataset: &Dataset, options: &SweepOptions) -> Result<SweepReport> {
    let p = &options.protocol;
    if options.seeds == 0 || options.ratios.is_empty() || p.methods.is_empty() {
        return Err(Error::Argument {
            name: "sweep",
            message: "seeds, ratios and methods must be non-empty".into(),
        });
    }
    for &r in &options.ratios {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Argument {
                name: "ratios",
                message: format!("{r} is outside [0, 1)"),
            });
        }
    }
    let classes = p.classes_of(dataset)?;

    // Achievability is a property of the split sizes, which do not depend on the seed.
    let max_ratio = classes
        .iter()
        .map(|(_, c)| {
            let s = make_one_class_split(dataset, c, 0, 0.0)?;
            let t = s.test_target_count();
            let o = s.test_is_target.len() - t;
            Ok(o as f64 / (o + t) as f64)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let worst = options.ratios.iter().copied().fold(0.0, f64::max);
    if worst > max_ratio + 1e-12 {
        return Err(Error::UnachievableRatio {
            ratio: worst,
            max: max_ratio,
        });
    }

    let jobs: Vec<(usize, usize)> = (0..options.seeds)
        .flat_map(|s| (0..classes.len()).map(move |c| (s, c)))
        .collect();
    // Per job: precision[ratio][method].
    let results: Vec<Vec<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(s, c)| sweep_cell(dataset, &classes[c].1, classes[c].0, s, options))
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut summary = Vec::new();
    for (ri, &ratio) in options.ratios.iter().enumerate() {
        for (mi, &method) in p.methods.iter().enumerate() {
            let mut per_seed = Vec::with_capacity(options.seeds);
            for seed in 0..options.seeds {
                let vals: Vec<f64> = jobs
                    .iter()
                    .zip(&results)
                    .filter(|((s, _), _)| *s == seed)
                    .map(|(_, r)| r[ri][mi])
                    .collect();
                let precision = vals.iter().sum::<f64>() / vals.len() as f64;
                per_seed.push(precision);
                points.push(SweepPoint {
                    ratio,
                    method,
                    seed,
                    precision,
                });
            }
            summary.push(SweepSummary {
                ratio,
                method,
                mean_precision: mean_std(&per_seed).0,
            });
        }
    }
    Ok(SweepReport { points, summary })
}

fn sweep_cell(dataset: &Dataset, class: &str, class_index: usize, seed_index: usize, options: &SweepOptions) -> Result<Vec<Vec<f64>>> {
    let p = &options.protocol;
    let seed = derive_seed(p.seed, &[class_index as u64, seed_index as u64]);
    let split = make_one_class_split(dataset, class, seed, 0.0)?;
    let prepared = prepare(&split, p.standardize)?;
    let params = select_all(p, &prepared.train, &prepared.unlabeled, cv_seed(seed))?;
    let models = p
        .methods
        .iter()
        .zip(&params)
        .map(|(&m, &pr)| train_method(m, pr, &prepared.train, None, &p.semi))
        .collect::<Result<Vec<_>>>()?;
    let scores = models
        .iter()
        .map(|m| m.score(&prepared.test))
        .collect::<bayesdd_core::Result<Vec<_>>>()?;

    let targets: Vec<usize> = (0..prepared.is_target.len()).filter(|&i| prepared.is_target[i]).collect();
    let outliers: Vec<usize> = (0..prepared.is_target.len()).filter(|&i| !prepared.is_target[i]).collect();
    let mut out = Vec::with_capacity(options.ratios.len());
    for (ri, &ratio) in options.ratios.iter().enumerate() {
        let wanted = outliers_for_ratio(ratio, targets.len()).min(outliers.len());
        let mut pick = outliers.clone();
        SplitRng::new(derive_seed(seed, &[2, ri as u64])).shuffle(&mut pick);
        let mut keep: Vec<usize> = targets.iter().copied().chain(pick[..wanted].iter().copied()).collect();
        keep.sort_unstable();
        let is_target: Vec<bool> = keep.iter().map(|&i| prepared.is_target[i]).collect();
        let per_method = scores
            .iter()
            .map(|s| {
                let sub: Vec<f64> = keep.iter().map(|&i| s[i]).collect();
                precision_at_k(&RankingResult::new(sub, targets.len()), &is_target)
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(per_method);
    }
    Ok(out)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, std::io::Error::other(e))
}

pub fn write_benchmark_csv(rows: &[BenchmarkRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "dataset",
        "method",
        "mean_precision",
        "std_precision",
        "mean_runtime_secs",
        "runs",
        "error",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            r.mean_precision.to_string(),
            r.std_precision.to_string(),
            r.mean_runtime_secs.to_string(),
            r.runs.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sweep_csv(points: &[SweepPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["ratio", "method", "seed", "precision"]).map_err(csv_err(path))?;
    for p in points {
        w.write_record([
            p.ratio.to_string(),
            p.method.to_string(),
            p.seed.to_string(),
            p.precision.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_examples() {
        let r = RankingResult::new(vec![0.1, 0.2, 0.3, 0.4], 2);
        assert_eq!(precision_at_k(&r, &[true, false, true, false]).unwrap(), 0.5);
        let sep = RankingResult::new(vec![0.1, 0.2, 5.0, 6.0], 2);
        assert_eq!(precision_at_k(&sep, &[true, true, false, false]).unwrap(), 1.0);
        let rev = RankingResult::new(vec![9.0, 8.0, 0.1, 0.2], 2);
        assert_eq!(precision_at_k(&rev, &[true, true, false, false]).unwrap(), 0.0);
    }

    #[test]
    fn k_out_of_range() {
        let r = RankingResult::new(vec![0.1, 0.2], 3);
        assert!(matches!(precision_at_k(&r, &[true, false]), Err(Error::Argument { name: "k", .. })));
        let r = RankingResult::new(vec![0.1, 0.2], 0);
        assert!(precision_at_k(&r, &[true, false]).is_err());
    }

    #[test]
    fn ties_rank_by_index() {
        let r = RankingResult::new(vec![1.0, 0.5, 1.0, 0.5], 1);
        assert_eq!(r.order, vec![1, 3, 0, 2]);
        assert_eq!(r.ranks(), vec![3, 1, 4, 2]);
    }

    #[test]
    fn unbiased_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn outlier_counts_for_ratio() {
        assert_eq!(outliers_for_ratio(0.0, 10), 0);
        assert_eq!(outliers_for_ratio(0.5, 10), 10);
        assert_eq!(outliers_for_ratio(0.7, 30), 70);
    }

    #[test]
    fn single_cell_grid() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.2], [0.3, -0.1], [-0.2, 0.1]]).unwrap();
        let cv = cross_validate(MethodTag::Bdd, &x, &[1.0], &[0.5], 2, 3).unwrap();
        assert_eq!(cv.params, MethodParams { sigma: 1.0, nu: 0.5 });
    }

    #[test]
    fn duplicate_cells_break_ties_upward() {
        let x = Matrix::from_rows(&[[0.0], [0.1], [0.2], [0.3]]).unwrap();
        let cv = cross_validate(MethodTag::Svdd, &x, &[2.0, 2.0], &[0.5, 0.5], 2, 0).unwrap();
        assert_eq!(cv.params, MethodParams { sigma: 2.0, nu: 0.5 });
        // identical scores for every cell of a constant dataset: tie goes to the largest pair
        let flat = Matrix::from_rows(&[[1.0], [1.0], [1.0], [1.0]]).unwrap();
        let cv = cross_validate(MethodTag::Bdd, &flat, &[0.5, 4.0, 1.0], &[0.3, 0.7], 2, 0).unwrap();
        assert_eq!(cv.params, MethodParams { sigma: 4.0, nu: 0.7 });
    }
}
