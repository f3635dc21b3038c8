//! Unsupervised grouping of feature vectors and glyphs.
//!
//! [`kmeans`] and [`som_train`] need the number of classes (or map size) up
//! front; [`leader_cluster`] lets the class count follow from a
//! dissimilarity threshold.

mod kmeans;
mod leader;
mod som;

pub use kmeans::{kmeans, ClusterAssignment};
pub use leader::leader_cluster;
pub use som::{quantization_error, som_initial, som_map, som_train, SomGrid, SomParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgcore::BinaryImage;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("no input vectors")]
    EmptyInput,
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("vector {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Serialized clustering outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub method: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub classes: Vec<Vec<String>>,
}

/// Ink fraction of each cell of a `zones`x`zones` partition of `grid`,
/// row-major. Cell edges fall at `floor(i*side/zones)`.
pub fn zoning_vector(grid: &BinaryImage, zones: usize) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let mut v = Vec::with_capacity(zones * zones);
    for zy in 0..zones {
        for zx in 0..zones {
            let (x0, x1) = (zx * w / zones, (zx + 1) * w / zones);
            let (y0, y1) = (zy * h / zones, (zy + 1) * h / zones);
            let area = (x1 - x0) * (y1 - y0);
            let ink = (y0..y1).flat_map(|y| (x0..x1).map(move |x| (x, y))).filter(|&(x, y)| grid.get(x, y)).count();
            v.push(if area == 0 { 0.0 } else { ink as f64 / area as f64 });
        }
    }
    v
}

/// Fraction of labelled items whose class majority label matches their own.
/// `None` when no item is labelled.
pub fn purity(classes: &[Vec<usize>], labels: &[Option<String>]) -> Option<f64> {
    let mut labelled = 0;
    let mut agree = 0;
    for class in classes {
        let mut counts: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
        for &i in class {
            if let Some(l) = &labels[i] {
                *counts.entry(l).or_default() += 1;
                labelled += 1;
            }
        }
        agree += counts.values().max().copied().unwrap_or(0);
    }
    (labelled > 0).then(|| agree as f64 / labelled as f64)
}

pub(crate) fn check_dims(vectors: &[Vec<f64>]) -> Result<usize, ClusterError> {
    let dim = vectors.first().ok_or(ClusterError::EmptyInput)?.len();
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(ClusterError::DimensionMismatch { index, expected: dim, got: v.len() });
        }
    }
    Ok(dim)
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
