//! Versioned JSON model documents.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use bayesdd_core::model::{SemiSupervisedInfo, SolverReport};
use bayesdd_core::{DescriptionModel, KernelSpec, Matrix, MethodTag};
use serde::{Deserialize, Serialize};

use crate::data::Standardizer;
use crate::error::{Error, Result};

pub const FORMAT: &str = "bayesdd-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub method: MethodTag,
    pub kernel: KernelSpec,
    pub nu: Option<f64>,
    pub upper_bound: f64,
    pub alpha: Vec<f64>,
    pub train_points: Vec<Vec<f64>>,
    pub center_norm_sq: f64,
    pub support_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_supervised: Option<SemiSupervisedInfo>,
    /// Applied to raw feature rows before scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocessing: Option<Standardizer>,
    /// Effective configuration that produced the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl ModelDocument {
    pub fn from_model(model: &DescriptionModel) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            method: model.method_tag,
            kernel: model.kernel,
            nu: model.nu,
            upper_bound: model.upper_bound,
            alpha: model.alpha.clone(),
            train_points: model.train_points.row_iter().map(<[f64]>::to_vec).collect(),
            center_norm_sq: model.center_norm_sq,
            support_indices: model.support_indices.clone(),
            solver: model.solver,
            semi_supervised: model.semi_supervised,
            preprocessing: None,
            config: None,
        }
    }

    pub fn to_model(&self) -> Result<DescriptionModel> {
        if self.format != FORMAT {
            return Err(Error::Model(format!("format `{}` is not `{FORMAT}`", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Model(format!("unsupported version {}", self.version)));
        }
        self.kernel.validate()?;
        let n = self.train_points.len();
        if n == 0 || self.alpha.len() != n {
            return Err(Error::Model(format!(
                "{} weights for {n} training points",
                self.alpha.len()
            )));
        }
        let train_points = Matrix::from_rows(&self.train_points)?;
        if self.support_indices.iter().any(|&i| i >= n) {
            return Err(Error::Model("support index out of range".into()));
        }
        if let Some(p) = &self.preprocessing {
            if p.mean.len() != train_points.cols() || p.scale.len() != train_points.cols() {
                return Err(Error::Model("preprocessing width differs from feature width".into()));
            }
        }
        Ok(DescriptionModel {
            train_points,
            alpha: self.alpha.clone(),
            kernel: self.kernel,
            center_norm_sq: self.center_norm_sq,
            support_indices: self.support_indices.clone(),
            method_tag: self.method,
            upper_bound: self.upper_bound,
            nu: self.nu,
            solver: self.solver,
            semi_supervised: self.semi_supervised,
        })
    }

    /// Scores raw rows, applying the stored preprocessing first.
    pub fn score(&self, raw: &Matrix) -> Result<Vec<f64>> {
        let model = self.to_model()?;
        let queries = match &self.preprocessing {
            Some(p) => p.transform(raw)?,
            None => raw.clone(),
        };
        Ok(model.score(&queries)?)
    }
}

pub fn save_model(doc: &ModelDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut f, doc)?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelDocument> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: ModelDocument = serde_json::from_reader(BufReader::new(f))?;
    doc.to_model()?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bayesdd_core::bdd::train_bdd;

    #[test]
    fn round_trip_is_exact() {
        let x = Matrix::from_rows(&[[0.1, 0.7], [1.0 / 3.0, -2.5], [0.9, 0.05]]).unwrap();
        let model = train_bdd(&x, 0.5, KernelSpec::gaussian(0.7).unwrap(), None).unwrap();
        let doc = ModelDocument::from_model(&model);
        let text = serde_json::to_string(&doc).unwrap();
        let back: ModelDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), model);
    }

    #[test]
    fn wrong_format_is_rejected() {
        let x = Matrix::from_rows(&[[0.0]]).unwrap();
        let model = train_bdd(&x, 0.5, KernelSpec::gaussian(1.0).unwrap(), None).unwrap();
        let mut doc = ModelDocument::from_model(&model);
        doc.format = "other".into();
        assert!(matches!(doc.to_model(), Err(Error::Model(_))));
        let mut doc = ModelDocument::from_model(&model);
        doc.alpha.push(0.0);
        assert!(doc.to_model().is_err());
    }
}
