use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureParams, FeatureVector, Extractor};
use crate::imgcore::{BinaryImage, GrayImage};

/// Smallest padded side for fractal fits; guarantees scales 2, 4 and 8.
pub const MIN_FRACTAL_SIDE: usize = 16;

/// Intensity range used by differential box counting.
const GRAY_LEVELS: u64 = 256;

/// Least-squares line through `(log scale, log count)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares of `y` on `x`. A perfectly flat `y` is a perfect
/// fit (`r2 = 1`).
pub fn fit_log_log(points: Vec<(f64, f64)>) -> FitDiagnostics {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = points.iter().map(|p| (p.1 - (intercept + slope * p.0)).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    FitDiagnostics { slope, intercept, r2, points }
}

fn dyadic_side(w: usize, h: usize) -> usize {
    w.max(h).next_power_of_two().max(MIN_FRACTAL_SIDE)
}

/// Box-counting dimension of the ink set.
///
/// The mask is padded with background to a power-of-two side `S` (at least
/// 16); for `s = 2, 4, ..., S/2` the number of occupied `s`x`s` boxes is
/// counted and the dimension is the slope of `log N(s)` against `log(1/s)`.
pub fn box_counting_dimension(bin: &BinaryImage) -> Result<FitDiagnostics, FeatureError> {
    if bin.is_empty() {
        return Err(FeatureError::EmptyForeground);
    }
    let side = dyadic_side(bin.width(), bin.height());
    let mut level: Vec<bool> = (0..side * side)
        .map(|i| {
            let (x, y) = (i % side, i / side);
            x < bin.width() && y < bin.height() && bin.get(x, y)
        })
        .collect();
    let mut cur = side;
    let mut points = Vec::new();
    // OR-pool one level at a time; level with cells of size s has side S/s
    while cur > 2 {
        let next = cur / 2;
        level = (0..next * next)
            .map(|i| {
                let (x, y) = (2 * (i % next), 2 * (i / next));
                level[y * cur + x] || level[y * cur + x + 1] || level[(y + 1) * cur + x] || level[(y + 1) * cur + x + 1]
            })
            .collect();
        cur = next;
        let s = side / cur;
        let count = level.iter().filter(|&&b| b).count();
        points.push((-(s as f64).log2(), (count as f64).log2()));
    }
    Ok(fit_log_log(points))
}

/// `(s, N_r(s))` for differential box counting on the replicate-padded
/// image, `s = 2, 4, ..., M/2`.
pub fn dbc_counts(img: &GrayImage) -> (usize, Vec<(usize, u64)>) {
    let m = dyadic_side(img.width(), img.height());
    let padded = img.pad_replicate(m, m);
    let mut lo: Vec<u8> = padded.data().to_vec();
    let mut hi = lo.clone();
    let mut cur = m;
    let mut counts = Vec::new();
    while cur > 2 {
        let next = cur / 2;
        let pool = |v: &[u8], pick: fn(u8, u8) -> u8| -> Vec<u8> {
            (0..next * next)
                .map(|i| {
                    let (x, y) = (2 * (i % next), 2 * (i / next));
                    pick(pick(v[y * cur + x], v[y * cur + x + 1]), pick(v[(y + 1) * cur + x], v[(y + 1) * cur + x + 1]))
                })
                .collect()
        };
        lo = pool(&lo, u8::min);
        hi = pool(&hi, u8::max);
        cur = next;
        let s = m / cur;
        // box height h = s*G/M, so floor(v/h) = floor(v*M / (s*G))
        let denom = s as u64 * GRAY_LEVELS;
        let total: u64 =
            lo.iter().zip(&hi).map(|(&a, &b)| (b as u64 * m as u64) / denom - (a as u64 * m as u64) / denom + 1).sum();
        counts.push((s, total));
    }
    (m, counts)
}

/// Differential box-counting dimension: slope of `log N_r(s)` against
/// `log(M/s)`.
pub fn dbc_dimension(img: &GrayImage) -> FitDiagnostics {
    let (m, counts) = dbc_counts(img);
    fit_log_log(counts.into_iter().map(|(s, n)| (((m / s) as f64).log2(), (n as f64).log2())).collect())
}

/// Global DBC dimension followed by the DBC dimension of each of the
/// `k`x`k` cells in row-major order. Cell edges fall at `floor(i*w/k)`.
pub fn fractal_signature(img: &GrayImage, k: usize) -> Result<FeatureVector, FeatureError> {
    if k == 0 {
        return Err(FeatureError::InvalidParameter("k must be >= 1".into()));
    }
    let (w, h) = (img.width(), img.height());
    if w.min(h) < 8 * k {
        return Err(FeatureError::TooSmall { width: w, height: h, reason: format!("need side >= {} for k = {k}", 8 * k) });
    }
    let mut values = Vec::with_capacity(1 + k * k);
    values.push(dbc_dimension(img).slope);
    for cy in 0..k {
        for cx in 0..k {
            let (x0, x1) = (cx * w / k, (cx + 1) * w / k);
            let (y0, y1) = (cy * h / k, (cy + 1) * h / k);
            values.push(dbc_dimension(&img.crop(x0, y0, x1 - x0, y1 - y0)).slope);
        }
    }
    Ok(FeatureVector {
        extractor: Extractor::FractalSig,
        values,
        params: FeatureParams { k: Some(k), levels: None, side: Some(w.max(h)) },
    })
}
