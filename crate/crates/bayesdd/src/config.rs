//! Declarative run configuration.
//!
//! A config is one JSON document; unknown fields are rejected so typos
//! surface as errors. Command-line flags are applied on top by the binary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bayesdd_core::MethodTag;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, load_libsvm, Dataset, LabelColumn};
use crate::error::{Error, Result};
use crate::eval::{
    BenchmarkOptions, MethodParams, ProtocolOptions, SemiParams, SweepOptions, DEFAULT_FOLDS, DEFAULT_NU_GRID,
    DEFAULT_REPETITIONS, DEFAULT_SIGMA_GRID,
};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "BAYESDD_OUTPUT_DIR";

/// Unlabeled share used by SSDD when none is configured.
pub const DEFAULT_SEMI_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: DataFormat,
    /// Zero-based index, header name, or `"last"`. Ignored for libsvm.
    #[serde(default = "default_label_column")]
    pub label_column: Option<LabelColumn>,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_label_column() -> Option<LabelColumn> {
    Some(LabelColumn::Name("last".into()))
}

fn default_true() -> bool {
    true
}

impl DatasetConfig {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            format: DataFormat::Csv,
            label_column: default_label_column(),
            has_header: true,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self.format {
            DataFormat::Csv => load_csv(&self.path, self.label_column.as_ref(), self.has_header),
            DataFormat::Libsvm => load_libsvm(&self.path),
        }
    }
}

/// A fixed kernel bandwidth or cross-validation over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Sigma {
    Fixed(f64),
    #[default]
    Cv,
}

impl FromStr for Sigma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("cv") {
            return Ok(Sigma::Cv);
        }
        s.parse::<f64>()
            .map(Sigma::Fixed)
            .map_err(|_| format!("`{s}` is neither a number nor \"cv\""))
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Fixed(v) => write!(f, "{v}"),
            Sigma::Cv => f.write_str("cv"),
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sigma::Fixed(v) => s.serialize_f64(*v),
            Sigma::Cv => s.serialize_str("cv"),
        }
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Sigma::Fixed(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Training data for `train` and `sweep`.
    pub dataset: Option<DatasetConfig>,
    /// Explicit unlabeled data for SSDD when training without a split.
    pub unlabeled: Option<DatasetConfig>,
    /// Benchmark inputs.
    pub datasets: Vec<DatasetConfig>,
    pub target_class: Option<String>,
    pub method: MethodTag,
    pub methods: Vec<MethodTag>,
    pub sigma: Sigma,
    pub nu: f64,
    pub sigma_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    pub folds: usize,
    pub graph_k: usize,
    pub graph_bandwidth: Option<f64>,
    pub epsilon: f64,
    pub use_laplacian_precision: bool,
    /// Share of the training pool held out as unlabeled; SSDD defaults to 2/3.
    pub unlabeled_fraction: Option<f64>,
    pub standardize: bool,
    pub seed: u64,
    pub repetitions: usize,
    pub ratios: Vec<f64>,
    pub output_dir: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let semi = SemiParams::default();
        Self {
            dataset: None,
            unlabeled: None,
            datasets: Vec::new(),
            target_class: None,
            method: MethodTag::Bdd,
            methods: vec![MethodTag::Svdd, MethodTag::Bdd],
            sigma: Sigma::Cv,
            nu: 0.5,
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            nu_grid: DEFAULT_NU_GRID.to_vec(),
            folds: DEFAULT_FOLDS,
            graph_k: semi.graph_k,
            graph_bandwidth: semi.graph_bandwidth,
            epsilon: semi.epsilon,
            use_laplacian_precision: semi.use_laplacian_precision,
            unlabeled_fraction: None,
            standardize: true,
            seed: 0,
            repetitions: DEFAULT_REPETITIONS,
            ratios: vec![0.1, 0.3, 0.5, 0.7],
            output_dir: None,
            model_path: None,
        }
    }
}

fn check(ok: bool, field: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

fn check_nu(method: MethodTag, nu: f64, field: &str) -> Result<()> {
    match method {
        MethodTag::Svdd => check(nu > 0.0 && nu <= 1.0, field, "SVDD requires 0 < nu <= 1"),
        MethodTag::Bdd | MethodTag::Ssdd => check(nu > 0.0 && nu < 1.0, field, "requires 0 < nu < 1"),
        MethodTag::Ml => Ok(()),
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let field = e.to_string();
            Error::config("<document>", field)
        })
    }

    /// Checks ranges and method-specific requirements. `methods` lists the
    /// learners the command will run.
    pub fn validate(&self, methods: &[MethodTag]) -> Result<()> {
        if let Sigma::Fixed(s) = self.sigma {
            check(positive(s), "sigma", "must be positive or \"cv\"")?;
        }
        for m in methods {
            check_nu(*m, self.nu, "nu")?;
        }
        if self.sigma == Sigma::Cv {
            check(!self.sigma_grid.is_empty(), "sigma_grid", "must not be empty")?;
            check(!self.nu_grid.is_empty(), "nu_grid", "must not be empty")?;
            for (i, s) in self.sigma_grid.iter().enumerate() {
                check(positive(*s), &format!("sigma_grid[{i}]"), "must be positive")?;
            }
            for (i, v) in self.nu_grid.iter().enumerate() {
                for m in methods {
                    check_nu(*m, *v, &format!("nu_grid[{i}]"))?;
                }
            }
            check(self.folds >= 2, "folds", "must be at least 2")?;
        }
        check(positive(self.epsilon), "epsilon", "must be positive")?;
        if let Some(b) = self.graph_bandwidth {
            check(positive(b), "graph_bandwidth", "must be positive")?;
        }
        check(self.graph_k >= 1, "graph_k", "must be at least 1")?;
        if let Some(f) = self.unlabeled_fraction {
            check((0.0..1.0).contains(&f), "unlabeled_fraction", "must lie in [0, 1)")?;
        }
        check(self.repetitions >= 1, "repetitions", "must be at least 1")?;
        for (i, r) in self.ratios.iter().enumerate() {
            check((0.0..1.0).contains(r), &format!("ratios[{i}]"), "must lie in [0, 1)")?;
        }
        Ok(())
    }

    pub fn semi_params(&self) -> SemiParams {
        SemiParams {
            graph_k: self.graph_k,
            graph_bandwidth: self.graph_bandwidth,
            epsilon: self.epsilon,
            use_laplacian_precision: self.use_laplacian_precision,
        }
    }

    /// Unlabeled share for a run over `methods`.
    pub fn effective_unlabeled_fraction(&self, methods: &[MethodTag]) -> f64 {
        self.unlabeled_fraction.unwrap_or(if methods.contains(&MethodTag::Ssdd) {
            DEFAULT_SEMI_FRACTION
        } else {
            0.0
        })
    }

    pub fn protocol(&self, methods: &[MethodTag]) -> ProtocolOptions {
        ProtocolOptions {
            methods: methods.to_vec(),
            seed: self.seed,
            folds: self.folds,
            sigma_grid: self.sigma_grid.clone(),
            nu_grid: self.nu_grid.clone(),
            fixed_params: match self.sigma {
                Sigma::Fixed(sigma) => Some(MethodParams { sigma, nu: self.nu }),
                Sigma::Cv => None,
            },
            standardize: self.standardize,
            classes: self.target_class.clone().map(|c| vec![c]),
            semi: self.semi_params(),
        }
    }

    pub fn benchmark_options(&self) -> BenchmarkOptions {
        BenchmarkOptions {
            protocol: self.protocol(&self.methods),
            repetitions: self.repetitions,
            unlabeled_fraction: self.effective_unlabeled_fraction(&self.methods),
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            protocol: self.protocol(&self.methods),
            ratios: self.ratios.clone(),
            seeds: self.repetitions,
        }
    }

    /// Output directory: the environment override if set, else the
    /// configured directory, else the working directory.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
