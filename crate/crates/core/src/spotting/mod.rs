//! Query-by-example retrieval over glyphs and words, and the
//! precision/recall harness used to compare matching methods.

mod bench;
mod eval;
mod fontspot;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::imgcore::ImageError;
use crate::matchers::{word_dissimilarity_prepared, MatchError, Method, PreparedGlyph, WordParams};
use crate::segmenter::{BBox, Glyph, SegmentError};

pub use bench::{
    char_benchmark, extract_words, load_tier_image, match_words, preprocess, segment_corpus_page, segment_page, word_benchmark,
    CharBenchmark, PageSegmentation, SegmentParams, SegmentedWord, WordBenchmark,
};
pub use eval::{
    compare_methods, evaluate, rank_all, EvalReport, MethodEval, PrPoint, ReferenceValue, TauPolicy, Truth, PUBLISHED_BASELINE,
};
pub use fontspot::{font_windows, fontspot_eval, window_features, ExtractorAccuracy, FontImage, FontspotParams, FontspotReport};

#[derive(Debug, Error)]
pub enum SpotError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no queries")]
    EmptyQueries,
    #[error("give exactly one of tau and top_k")]
    Cutoff,
    #[error("query '{0}' has no relevance judgments")]
    MissingTruth(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// How much of a ranking counts as retrieved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// Everything with dissimilarity `<= tau`.
    Tau(f64),
    /// The first `k` entries.
    TopK(usize),
}

impl Cutoff {
    pub fn from_options(tau: Option<f64>, top_k: Option<usize>) -> Result<Cutoff, SpotError> {
        match (tau, top_k) {
            (Some(t), None) if t.is_finite() => Ok(Cutoff::Tau(t)),
            (None, Some(k)) => Ok(Cutoff::TopK(k)),
            _ => Err(SpotError::Cutoff),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotResult {
    pub query_id: String,
    pub method: Method,
    /// Ascending by value, ties by id.
    pub ranked: Vec<Ranked>,
    pub threshold: Option<f64>,
    /// Length of the retrieved prefix of `ranked`.
    pub matched: usize,
}

impl SpotResult {
    pub fn matches(&self) -> &[Ranked] {
        &self.ranked[..self.matched]
    }

    pub fn apply(&mut self, cutoff: Cutoff) {
        match cutoff {
            Cutoff::Tau(t) => {
                self.threshold = Some(t);
                self.matched = self.ranked.partition_point(|r| r.value <= t);
            }
            Cutoff::TopK(k) => {
                self.threshold = None;
                self.matched = k.min(self.ranked.len());
            }
        }
    }
}

/// Something that can be ranked against a corpus of its own kind.
pub trait Spottable: Sync {
    type Prepared: Send + Sync;

    fn spot_id(&self) -> &str;

    fn prepare(&self) -> Self::Prepared;

    fn dissimilarity(a: &Self::Prepared, b: &Self::Prepared, method: Method, params: &WordParams) -> Result<f64, MatchError>;
}

impl Spottable for Glyph {
    type Prepared = PreparedGlyph;

    fn spot_id(&self) -> &str {
        &self.id
    }

    fn prepare(&self) -> PreparedGlyph {
        PreparedGlyph::new(self)
    }

    fn dissimilarity(a: &PreparedGlyph, b: &PreparedGlyph, method: Method, _: &WordParams) -> Result<f64, MatchError> {
        a.dissimilarity(b, method)
    }
}

/// A segmented word: its glyphs left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub id: String,
    pub source_id: String,
    pub bbox: BBox,
    pub glyphs: Vec<Glyph>,
    /// Ground-truth text, when known.
    pub label: Option<String>,
}

impl Spottable for Word {
    type Prepared = Vec<PreparedGlyph>;

    fn spot_id(&self) -> &str {
        &self.id
    }

    fn prepare(&self) -> Vec<PreparedGlyph> {
        self.glyphs.iter().map(PreparedGlyph::new).collect()
    }

    fn dissimilarity(a: &Self::Prepared, b: &Self::Prepared, method: Method, params: &WordParams) -> Result<f64, MatchError> {
        word_dissimilarity_prepared(a, b, method, *params)
    }
}

/// Ranks every corpus entry except the query's own id.
pub(crate) fn rank_prepared<T: Spottable>(
    query_id: &str,
    query: &T::Prepared,
    corpus: &[(&str, T::Prepared)],
    method: Method,
    params: &WordParams,
) -> Result<Vec<Ranked>, MatchError> {
    let mut ranked = corpus
        .iter()
        .filter(|(id, _)| *id != query_id)
        .map(|(id, p)| T::dissimilarity(query, p, method, params).map(|value| Ranked { id: id.to_string(), value }))
        .collect::<Result<Vec<_>, _>>()?;
    ranked.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.id.cmp(&b.id)));
    Ok(ranked)
}

pub(crate) fn prepare_all<T: Spottable>(items: &[T]) -> Vec<(&str, T::Prepared)> {
    items.par_iter().map(|t| (t.spot_id(), t.prepare())).collect()
}

/// Ranks `corpus` against `query` and keeps the prefix selected by `cutoff`.
pub fn spot<T: Spottable>(query: &T, corpus: &[T], method: Method, cutoff: Cutoff, params: &WordParams) -> Result<SpotResult, SpotError> {
    if corpus.is_empty() {
        return Err(SpotError::EmptyCorpus);
    }
    let prepared = prepare_all(corpus);
    let ranked = rank_prepared::<T>(query.spot_id(), &query.prepare(), &prepared, method, params)?;
    let mut result = SpotResult { query_id: query.spot_id().to_string(), method, ranked, threshold: None, matched: 0 };
    result.apply(cutoff);
    Ok(result)
}

#[cfg(test)]
mod tests;
