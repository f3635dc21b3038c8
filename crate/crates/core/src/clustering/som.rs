use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, sq_dist, ClusterError};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SomParams {
    pub rows: usize,
    pub cols: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Initial learning rate; decays exponentially to `lr0 / 100`.
    pub lr0: f64,
    /// Initial neighbourhood radius in grid units; decays exponentially to 0.5.
    pub radius0: f64,
}

impl Default for SomParams {
    fn default() -> Self {
        SomParams { rows: 4, cols: 4, epochs: 50, seed: 42, lr0: 0.5, radius0: 2.0 }
    }
}

/// A trained self-organizing map. Weights are row-major over nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomGrid {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<Vec<f64>>,
    pub trained_epochs: usize,
}

impl SomGrid {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Row-major index of the best-matching unit; ties go to the lowest index.
    pub fn bmu(&self, v: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, w) in self.weights.iter().enumerate() {
            let d = sq_dist(v, w);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

/// Weights drawn uniformly inside the per-dimension data range.
fn init_grid(vectors: &[Vec<f64>], dim: usize, p: &SomParams, r: &mut rng::Rng) -> SomGrid {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for v in vectors {
        for d in 0..dim {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let weights = (0..p.rows * p.cols)
        .map(|_| (0..dim).map(|d| lo[d] + r.random::<f64>() * (hi[d] - lo[d])).collect())
        .collect();
    SomGrid { rows: p.rows, cols: p.cols, weights, trained_epochs: 0 }
}

/// Trains a rectangular SOM with a Gaussian neighbourhood.
///
/// Learning rate and radius decay exponentially over the total number of
/// presentations, from `(lr0, radius0)` to `(lr0 / 100, 0.5)`. Each epoch
/// visits the inputs in a seeded shuffled order.
pub fn som_train(vectors: &[Vec<f64>], params: &SomParams) -> Result<SomGrid, ClusterError> {
    let dim = check_dims(vectors)?;
    if params.rows == 0 || params.cols == 0 {
        return Err(ClusterError::InvalidParameter("SOM grid needs rows, cols >= 1".into()));
    }
    if params.epochs == 0 {
        return Err(ClusterError::InvalidParameter("epochs must be >= 1".into()));
    }
    if !(params.lr0 > 0.0 && params.lr0 <= 1.0) || !(params.radius0 > 0.0) {
        return Err(ClusterError::InvalidParameter("need 0 < lr0 <= 1 and radius0 > 0".into()));
    }
    let mut r = rng::rng_from(params.seed);
    let mut grid = init_grid(vectors, dim, params, &mut r);
    let total = (params.epochs * vectors.len()) as f64;
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut step = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            let frac = step as f64 / total;
            let lr = params.lr0 * 0.01f64.powf(frac);
            let radius = params.radius0 * (0.5 / params.radius0).powf(frac);
            let x = &vectors[i];
            let bmu = grid.bmu(x);
            let (br, bc) = ((bmu / params.cols) as f64, (bmu % params.cols) as f64);
            for (node, w) in grid.weights.iter_mut().enumerate() {
                let (nr, nc) = ((node / params.cols) as f64, (node % params.cols) as f64);
                let d2 = (nr - br).powi(2) + (nc - bc).powi(2);
                let h = (-d2 / (2.0 * radius * radius)).exp();
                for (wd, xd) in w.iter_mut().zip(x) {
                    *wd += lr * h * (xd - *wd);
                }
            }
            step += 1;
        }
        grid.trained_epochs += 1;
    }
    Ok(grid)
}

/// Grid coordinates `(row, col)` of the best-matching unit.
pub fn som_map(grid: &SomGrid, v: &[f64]) -> Result<(usize, usize), ClusterError> {
    if v.len() != grid.dim() {
        return Err(ClusterError::DimensionMismatch { index: 0, expected: grid.dim(), got: v.len() });
    }
    let i = grid.bmu(v);
    Ok((i / grid.cols, i % grid.cols))
}

/// Mean Euclidean distance from each vector to its best-matching unit.
pub fn quantization_error(grid: &SomGrid, vectors: &[Vec<f64>]) -> f64 {
    let total: f64 = vectors.iter().map(|v| sq_dist(v, &grid.weights[grid.bmu(v)]).sqrt()).sum();
    total / vectors.len() as f64
}

/// Untrained grid as `som_train` would initialize it.
pub fn som_initial(vectors: &[Vec<f64>], params: &SomParams) -> Result<SomGrid, ClusterError> {
    let dim = check_dims(vectors)?;
    let mut r = rng::rng_from(params.seed);
    Ok(init_grid(vectors, dim, params, &mut r))
}
