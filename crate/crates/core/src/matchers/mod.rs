//! Glyph dissimilarities.
//!
//! Four character-level measures are provided, all symmetric and zero on
//! identical grids:
//!
//! * `xor`: fraction of grid pixels where the two masks differ.
//! * `edm`: every XOR-mismatch pixel weighted by its Euclidean distance to
//!   the other glyph's nearest ink, normalized by the total ink of both.
//! * `vproj`: Euclidean distance between vertical projection profiles,
//!   divided by the grid side.
//! * `vproj_dtw`: dynamic time warping between vertical profiles.
//!
//! [`word_dissimilarity`] composes any of them into a word score by aligning
//! glyph sequences.

mod dtw;
mod prepared;
mod word;

pub use dtw::{dtw_cost, dtw_distance, DtwCost};
pub use prepared::PreparedGlyph;
pub use word::{word_dissimilarity, word_dissimilarity_prepared, WordParams};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmenter::Glyph;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("grid sides differ: {0} vs {1}")]
    SideMismatch(usize, usize),
    #[error("glyph '{0}' has no ink")]
    EmptyGlyph(String),
    #[error("profile lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty profile")]
    EmptyProfile,
    #[error("band {band} cannot align sequences of lengths {a} and {b}")]
    InfeasibleBand { band: usize, a: usize, b: usize },
    #[error("empty glyph sequence")]
    EmptySequence,
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
}

/// A character-level dissimilarity measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Xor,
    Edm,
    Vproj,
    VprojDtw,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Xor, Method::Edm, Method::Vproj, Method::VprojDtw];

    pub fn name(self) -> &'static str {
        match self {
            Method::Xor => "xor",
            Method::Edm => "edm",
            Method::Vproj => "vproj",
            Method::VprojDtw => "vproj_dtw",
        }
    }

    /// Skip penalty for unmatched glyphs in word alignment, in this
    /// method's units.
    pub fn default_skip_penalty(self) -> f64 {
        match self {
            Method::Xor => 0.25,
            Method::Edm => 2.0,
            Method::Vproj => 1.0,
            Method::VprojDtw => 2.0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = MatchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "xor" => Ok(Method::Xor),
            "edm" => Ok(Method::Edm),
            "vproj" => Ok(Method::Vproj),
            "vproj_dtw" | "dtw" => Ok(Method::VprojDtw),
            other => Err(MatchError::UnknownMethod(other.to_string())),
        }
    }
}

/// Per-column ink counts of a glyph grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub values: Vec<u32>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// A scored pair, as emitted by batch matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityRecord {
    pub query_id: String,
    pub target_id: String,
    pub method: Method,
    pub value: f64,
}

fn check_sides(a: &Glyph, b: &Glyph) -> Result<(), MatchError> {
    if a.side() != b.side() {
        return Err(MatchError::SideMismatch(a.side(), b.side()));
    }
    Ok(())
}

pub fn xor_dissimilarity(a: &Glyph, b: &Glyph) -> Result<f64, MatchError> {
    check_sides(a, b)?;
    PreparedGlyph::new(a).dissimilarity(&PreparedGlyph::new(b), Method::Xor)
}

pub fn edm_dissimilarity(a: &Glyph, b: &Glyph) -> Result<f64, MatchError> {
    check_sides(a, b)?;
    PreparedGlyph::new(a).dissimilarity(&PreparedGlyph::new(b), Method::Edm)
}

pub fn vertical_profile(g: &Glyph) -> Profile {
    let grid = &g.grid;
    Profile { values: (0..grid.width()).map(|x| (0..grid.height()).filter(|&y| grid.get(x, y)).count() as u32).collect() }
}

/// `||p - q||_2 / N`.
pub fn profile_dissimilarity(p: &Profile, q: &Profile) -> Result<f64, MatchError> {
    if p.len() != q.len() {
        return Err(MatchError::LengthMismatch(p.len(), q.len()));
    }
    if p.is_empty() {
        return Err(MatchError::EmptyProfile);
    }
    let ss: f64 = p.values.iter().zip(&q.values).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum();
    Ok(ss.sqrt() / p.len() as f64)
}

/// Dispatches to the measure named by `method`.
pub fn glyph_dissimilarity(a: &Glyph, b: &Glyph, method: Method) -> Result<f64, MatchError> {
    check_sides(a, b)?;
    PreparedGlyph::new(a).dissimilarity(&PreparedGlyph::new(b), method)
}
