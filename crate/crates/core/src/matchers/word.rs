use super::{MatchError, Method, PreparedGlyph};
use crate::segmenter::Glyph;

/// Alignment settings for [`word_dissimilarity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordParams {
    /// Extra cost of a horizontal or vertical step; `None` uses
    /// [`Method::default_skip_penalty`].
    pub skip_penalty: Option<f64>,
    /// Optional Sakoe-Chiba band over glyph indices.
    pub band: Option<usize>,
}

impl Default for WordParams {
    fn default() -> Self {
        WordParams { skip_penalty: None, band: None }
    }
}

/// DTW over two glyph sequences with the chosen character measure as local
/// cost. Steps that repeat a glyph pay the local cost of the cell entered
/// plus the skip penalty; the total is divided by `len(a) + len(b)`.
pub fn word_dissimilarity(a: &[Glyph], b: &[Glyph], method: Method, params: WordParams) -> Result<f64, MatchError> {
    let pa: Vec<PreparedGlyph> = a.iter().map(PreparedGlyph::new).collect();
    let pb: Vec<PreparedGlyph> = b.iter().map(PreparedGlyph::new).collect();
    word_dissimilarity_prepared(&pa, &pb, method, params)
}

pub fn word_dissimilarity_prepared(
    a: &[PreparedGlyph],
    b: &[PreparedGlyph],
    method: Method,
    params: WordParams,
) -> Result<f64, MatchError> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(MatchError::EmptySequence);
    }
    if let Some(band) = params.band {
        if band < n.abs_diff(m) {
            return Err(MatchError::InfeasibleBand { band, a: n, b: m });
        }
    }
    let skip = params.skip_penalty.unwrap_or_else(|| method.default_skip_penalty());
    let mut table = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            if params.band.is_some_and(|w| i.abs_diff(j) > w) {
                continue;
            }
            let local = a[i].dissimilarity(&b[j], method)?;
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(table[(i - 1) * m + j - 1]);
                }
                if i > 0 {
                    best = best.min(table[(i - 1) * m + j] + skip);
                }
                if j > 0 {
                    best = best.min(table[i * m + j - 1] + skip);
                }
                best
            };
            table[i * m + j] = best + local;
        }
    }
    Ok(table[n * m - 1] / (n + m) as f64)
}
