//! Dataset ingestion, standardization and one-class splits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use bayesdd_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<String>,
    pub name: String,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<String>, name: impl Into<String>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(bayesdd_core::Error::DimensionMismatch {
                left: features.rows(),
                right: labels.len(),
            }
            .into());
        }
        if !features.is_finite() {
            return Err(bayesdd_core::Error::NonFinite { what: "features" }.into());
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Distinct labels in order of first appearance.
    pub fn classes(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for l in &self.labels {
            if !seen.contains(l) {
                seen.push(l.clone());
            }
        }
        seen
    }

    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for l in &self.labels {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
        counts
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl LabelColumn {
    /// `"last"`, a zero-based index, or a header name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }

    fn resolve(&self, header: Option<&[String]>, width: usize, path: &Path) -> Result<usize> {
        match self {
            LabelColumn::Index(i) if *i < width => Ok(*i),
            LabelColumn::Index(i) => Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("label column {i} out of range for {width} columns"),
            }),
            LabelColumn::Name(name) if name == "last" => Ok(width - 1),
            LabelColumn::Name(name) => header
                .and_then(|h| h.iter().position(|c| c.trim() == name))
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("label column `{name}` not found in header"),
                }),
        }
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads a CSV file with one label column and numeric features elsewhere.
/// With `label_column = None` every column is a feature and labels are empty
/// strings.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&LabelColumn>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut header: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut label_idx: Option<usize> = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if has_header && header.is_none() {
            header = Some(record.iter().map(str::to_string).collect());
            width = Some(record.len());
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {w} fields, found {}", record.len()),
            });
        }
        if label_idx.is_none() {
            if let Some(lc) = label_column {
                label_idx = Some(lc.resolve(header.as_deref(), w, path)?);
            }
        }
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column {j}: `{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("column {j}: non-finite value"),
                });
            }
            data.push(v);
        }
        if label_idx.is_none() {
            labels.push(String::new());
        }
    }

    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset {
            path: path.to_path_buf(),
        });
    }
    let d = data.len() / n;
    let features = Matrix::from_vec(n, d, data)?;
    Dataset::new(features, labels, dataset_name(path))
}

/// Reads the sparse `label index:value ...` format with 1-based indices.
/// The dimension is the largest index seen; missing entries are zero.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;

    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("`{tok}` is not an index:value pair")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("`{idx}` is not a feature index")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("`{val}` is not a number")))?;
            if !val.is_finite() {
                return Err(err(format!("feature {idx}: non-finite value")));
            }
            if entries.iter().any(|(j, _)| *j == idx) {
                return Err(err(format!("duplicate feature index {idx}")));
            }
            dim = dim.max(idx);
            entries.push((idx, val));
        }
        rows.push(entries);
        labels.push(label.to_string());
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset {
            path: path.to_path_buf(),
        });
    }
    let mut features = Matrix::zeros(rows.len(), dim);
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            features[(i, j - 1)] = v;
        }
    }
    Dataset::new(features, labels, dataset_name(path))
}

/// Writes features followed by a `label` column, with a header row.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut header: Vec<String> = (0..dataset.dim()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(io)?;
    for (i, row) in dataset.features.row_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(dataset.labels[i].clone());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant features.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Matrix) -> Self {
        let n = train.rows().max(1) as f64;
        let d = train.cols();
        let mut mean = vec![0.0; d];
        for row in train.row_iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in train.row_iter() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * (1.0 + sd) && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        if m.rows() > 0 && m.cols() != self.mean.len() {
            return Err(bayesdd_core::Error::DimensionMismatch {
                left: self.mean.len(),
                right: m.cols(),
            }
            .into());
        }
        let mut out = m.clone();
        for i in 0..out.rows() {
            for ((v, mu), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - mu) / s;
            }
        }
        Ok(out)
    }
}

/// Z-scores `train` and each of `others` with statistics from `train` alone.
pub fn standardize(train: &Matrix, others: &[&Matrix]) -> Result<(Matrix, Vec<Matrix>, Standardizer)> {
    let s = Standardizer::fit(train);
    let t = s.transform(train)?;
    let rest = others.iter().map(|m| s.transform(m)).collect::<Result<Vec<_>>>()?;
    Ok((t, rest, s))
}

/// Train/test partition for one target class.
#[derive(Debug, Clone, PartialEq)]
pub struct OneClassSplit {
    pub train_targets: Matrix,
    pub test_features: Matrix,
    pub test_is_target: Vec<bool>,
    pub unlabeled_pool: Matrix,
    pub target_class: String,
    pub seed: u64,
    pub manifest: SplitManifest,
}

impl OneClassSplit {
    pub fn test_target_count(&self) -> usize {
        self.test_is_target.iter().filter(|&&t| t).count()
    }
}

/// Source-row indices behind a split, for reproducibility records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub dataset: String,
    pub target_class: String,
    pub seed: u64,
    pub unlabeled_fraction: f64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub unlabeled_indices: Vec<usize>,
    pub unlabeled_targets: usize,
    pub unlabeled_outliers: usize,
}

/// Builds a one-class split.
///
/// A seeded shuffle of the target rows puts `floor(n_t / 2)` of them in a
/// training pool; the remaining targets and every outlier form the test set.
///
/// With `unlabeled_fraction = f > 0` the pool is divided further: its first
/// `n_t/2 − round(f · n_t/2)` rows stay labeled, and the unlabeled set aims
/// for `round(labeled · f / (1 − f))` rows (twice the labeled count at
/// `f = 2/3`). It takes the rest of the pool first, tops up with randomly
/// chosen outliers when the pool runs short, and returns any surplus pool
/// targets to the test set. Test rows are kept in source order.
pub fn make_one_class_split(dataset: &Dataset, target_class: &str, seed: u64, unlabeled_fraction: f64) -> Result<OneClassSplit> {
    if !(0.0..1.0).contains(&unlabeled_fraction) {
        return Err(Error::Argument {
            name: "unlabeled_fraction",
            message: "must lie in [0, 1)".into(),
        });
    }
    let mut targets: Vec<usize> = Vec::new();
    let mut outliers: Vec<usize> = Vec::new();
    for (i, l) in dataset.labels.iter().enumerate() {
        if l == target_class {
            targets.push(i);
        } else {
            outliers.push(i);
        }
    }
    let needed = if unlabeled_fraction > 0.0 { 4 } else { 2 };
    if targets.len() < needed {
        return Err(Error::InsufficientTargets {
            class: target_class.to_string(),
            found: targets.len(),
            needed,
        });
    }

    let mut rng = SplitRng::new(seed);
    rng.shuffle(&mut targets);
    let pool_size = targets.len() / 2;
    let (pool, rest) = targets.split_at(pool_size);
    let mut test: Vec<usize> = rest.to_vec();

    let mut train: Vec<usize>;
    let mut unlabeled: Vec<usize> = Vec::new();
    let mut unlabeled_outliers = 0usize;
    if unlabeled_fraction == 0.0 {
        train = pool.to_vec();
        test.extend_from_slice(&outliers);
    } else {
        let moved = ((pool_size as f64 * unlabeled_fraction).round() as usize).min(pool_size - 1);
        let labeled = pool_size - moved;
        train = pool[..labeled].to_vec();
        let wanted = (labeled as f64 * unlabeled_fraction / (1.0 - unlabeled_fraction)).round() as usize;
        let remainder = &pool[labeled..];
        let take = remainder.len().min(wanted);
        unlabeled.extend_from_slice(&remainder[..take]);
        test.extend_from_slice(&remainder[take..]);
        let mut shuffled_outliers = outliers.clone();
        rng.shuffle(&mut shuffled_outliers);
        let top_up = (wanted - take).min(shuffled_outliers.len());
        unlabeled.extend_from_slice(&shuffled_outliers[..top_up]);
        unlabeled_outliers = top_up;
        test.extend_from_slice(&shuffled_outliers[top_up..]);
    }
    test.sort_unstable();
    // Training order follows the shuffle; keep it, it is part of the seed's output.
    train.shrink_to_fit();

    let test_is_target = test.iter().map(|&i| dataset.labels[i] == target_class).collect();
    let manifest = SplitManifest {
        dataset: dataset.name.clone(),
        target_class: target_class.to_string(),
        seed,
        unlabeled_fraction,
        unlabeled_targets: unlabeled.len() - unlabeled_outliers,
        unlabeled_outliers,
        train_indices: train.clone(),
        test_indices: test.clone(),
        unlabeled_indices: unlabeled.clone(),
    };
    Ok(OneClassSplit {
        train_targets: dataset.features.select_rows(&train),
        test_features: dataset.features.select_rows(&test),
        test_is_target,
        unlabeled_pool: dataset.features.select_rows(&unlabeled),
        target_class: target_class.to_string(),
        seed,
        manifest,
    })
}

pub fn write_manifest(manifest: &SplitManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut f, manifest)?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}
