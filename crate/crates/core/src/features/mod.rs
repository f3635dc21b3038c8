//! Font and texture features: fractal dimensions (binary box counting and
//! grayscale differential box counting), Haar wavelet sub-band energies and
//! a 1-nearest-neighbour font classifier.

mod classify;
mod fractal;
mod wavelet;

pub use classify::{classify_font_1nn, euclidean};
pub use fractal::{
    box_counting_dimension, dbc_counts, dbc_dimension, fit_log_log, fractal_signature, FitDiagnostics,
    MIN_FRACTAL_SIDE,
};
pub use wavelet::{haar_subband_energies, wavelet_energy_features};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("image has no ink")]
    EmptyForeground,
    #[error("image {width}x{height} is too small: {reason}")]
    TooSmall { width: usize, height: usize, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("feature vectors are incompatible: {0}")]
    ExtractorMismatch(String),
    #[error("training set is empty")]
    EmptyTraining,
    #[error("unknown extractor '{0}'")]
    UnknownExtractor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    FractalSig,
    WaveletEnergy,
}

impl Extractor {
    pub fn name(self) -> &'static str {
        match self {
            Extractor::FractalSig => "fractal_sig",
            Extractor::WaveletEnergy => "wavelet_energy",
        }
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Extractor {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "fractal_sig" | "fractal" => Ok(Extractor::FractalSig),
            "wavelet_energy" | "wavelet" => Ok(Extractor::WaveletEnergy),
            other => Err(FeatureError::UnknownExtractor(other.into())),
        }
    }
}

/// Parameters a feature vector was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FeatureParams {
    /// Cells per side for fractal signatures.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    /// Decomposition levels for wavelet energies.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub levels: Option<usize>,
    /// Side of the sample window the features were computed on.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub side: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub extractor: Extractor,
    pub values: Vec<f64>,
    pub params: FeatureParams,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn compatible_with(&self, other: &FeatureVector) -> bool {
        self.extractor == other.extractor && self.params == other.params && self.len() == other.len()
    }
}

/// One line of a feature-set JSON-lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub glyph_id: String,
    pub extractor: Extractor,
    pub params: FeatureParams,
    pub values: Vec<f64>,
}

impl FeatureRecord {
    pub fn new(glyph_id: impl Into<String>, fv: &FeatureVector) -> Self {
        FeatureRecord { glyph_id: glyph_id.into(), extractor: fv.extractor, params: fv.params, values: fv.values.clone() }
    }

    pub fn vector(&self) -> FeatureVector {
        FeatureVector { extractor: self.extractor, values: self.values.clone(), params: self.params }
    }
}
