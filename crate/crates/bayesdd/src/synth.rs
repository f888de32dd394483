//! Two-dimensional synthetic target sets.

use std::f64::consts::PI;
use std::str::FromStr;

use bayesdd_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// An S traced by two opposed half circles of unit radius.
    SCurve,
    /// Unit circle.
    Ring,
    /// Three isotropic clusters of equal size.
    Blobs,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::SCurve, Shape::Ring, Shape::Blobs];

    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::SCurve => "s_curve",
            Shape::Ring => "ring",
            Shape::Blobs => "blobs",
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.as_str() == s)
            .ok_or_else(|| Error::Argument {
                name: "shape",
                message: format!("unknown shape `{s}`; expected s_curve, ring or blobs"),
            })
    }
}

const BLOB_CENTERS: [[f64; 2]; 3] = [[0.0, 0.0], [3.0, 0.0], [1.5, 2.5]];

/// `n` noisy samples of `shape`, labelled `target`.
pub fn generate(shape: Shape, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Argument {
            name: "n",
            message: "must be at least 1".into(),
        });
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Argument {
            name: "noise",
            message: "must be a finite non-negative number".into(),
        });
    }
    let mut rng = SplitRng::new(seed);
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (x, y) = match shape {
            Shape::SCurve => {
                let t = 3.0 * PI * (rng.unit() - 0.5);
                (t.sin(), t.signum() * (t.cos() - 1.0))
            }
            Shape::Ring => {
                let t = 2.0 * PI * rng.unit();
                (t.cos(), t.sin())
            }
            Shape::Blobs => {
                let c = BLOB_CENTERS[i % 3];
                (c[0], c[1])
            }
        };
        data.push(x + noise * rng.normal());
        data.push(y + noise * rng.normal());
    }
    let features = Matrix::from_vec(n, 2, data)?;
    Dataset::new(features, vec!["target".to_string(); n], shape.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let d = generate(Shape::Ring, 1, 0.1, 0).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn deterministic() {
        for shape in Shape::ALL {
            assert_eq!(generate(shape, 50, 0.1, 9).unwrap(), generate(shape, 50, 0.1, 9).unwrap());
        }
    }

    #[test]
    fn noiseless_s_curve_lies_on_arcs() {
        let d = generate(Shape::SCurve, 200, 0.0, 1).unwrap();
        for row in d.features.row_iter() {
            let (x, y) = (row[0], row[1]);
            // each half is a unit circle centred at (0, ±1)
            let cy = if y <= 0.0 { -1.0 } else { 1.0 };
            assert!((x * x + (y - cy) * (y - cy) - 1.0).abs() < 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn shape_names() {
        assert_eq!("s_curve".parse::<Shape>().unwrap(), Shape::SCurve);
        assert!("spiral".parse::<Shape>().is_err());
    }
}
