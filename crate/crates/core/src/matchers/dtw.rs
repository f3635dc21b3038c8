use super::{MatchError, Profile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwCost {
    /// Cumulative local cost along the optimal path.
    pub raw: f64,
    /// `raw / (len(a) + len(b))`.
    pub normalized: f64,
}

/// Classic DTW with local cost `|a_i - b_j|` and steps (1,0), (0,1), (1,1).
///
/// `band` restricts cells to `|i - j| <= band` (Sakoe-Chiba) and must be at
/// least the length difference.
pub fn dtw_cost(a: &[f64], b: &[f64], band: Option<usize>) -> Result<DtwCost, MatchError> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(MatchError::EmptyProfile);
    }
    if let Some(band) = band {
        if band < n.abs_diff(m) {
            return Err(MatchError::InfeasibleBand { band, a: n, b: m });
        }
    }
    let inside = |i: usize, j: usize| band.is_none_or(|w| i.abs_diff(j) <= w);

    // two rolling rows of the cumulative cost table
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            if !inside(i, j) {
                cur[j] = f64::INFINITY;
                continue;
            }
            let local = (a[i] - b[j]).abs();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 {
                    best = best.min(prev[j]);
                }
                if j > 0 {
                    best = best.min(cur[j - 1]);
                }
                if i > 0 && j > 0 {
                    best = best.min(prev[j - 1]);
                }
                best
            };
            cur[j] = best + local;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let raw = prev[m - 1];
    Ok(DtwCost { raw, normalized: raw / (n + m) as f64 })
}

/// Normalized DTW distance between two projection profiles.
pub fn dtw_distance(p: &Profile, q: &Profile, band: Option<usize>) -> Result<f64, MatchError> {
    Ok(dtw_cost(&p.as_f64(), &q.as_f64(), band)?.normalized)
}
