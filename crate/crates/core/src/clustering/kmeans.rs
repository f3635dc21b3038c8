use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, sq_dist, ClusterError};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub history: Vec<f64>,
}

fn nearest(v: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(v, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_init(vectors: &[Vec<f64>], k: usize, r: &mut rng::Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![vectors[r.random_range(0..vectors.len())].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = r.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            r.random_range(0..vectors.len())
        };
        centroids.push(vectors[pick].clone());
        for (d, v) in d2.iter_mut().zip(vectors) {
            *d = d.min(sq_dist(v, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// Lloyd's k-means with k-means++ seeding.
///
/// Iterates until assignments stop changing or `max_iter` is reached. An
/// emptied cluster takes the point farthest from its current centroid.
/// Deterministic for fixed inputs, `k` and `seed`.
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<ClusterAssignment, ClusterError> {
    let dim = check_dims(vectors)?;
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(ClusterError::KOutOfRange { k, n });
    }
    if max_iter == 0 {
        return Err(ClusterError::InvalidParameter("max_iter must be >= 1".into()));
    }
    let mut r = rng::rng_from(seed);
    let mut centroids = plus_plus_init(vectors, k, &mut r);
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();

    for _ in 0..max_iter {
        let assigned: Vec<(usize, f64)> = vectors.iter().map(|v| nearest(v, &centroids)).collect();
        let mut new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        if new_labels == labels {
            break;
        }

        let mut sizes = vec![0usize; k];
        for &l in &new_labels {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[new_labels[i]] > 1)
                .max_by(|&a, &b| assigned[a].1.total_cmp(&assigned[b].1).then(b.cmp(&a)))
                .expect("k <= n leaves a cluster with two or more points");
            sizes[new_labels[donor]] -= 1;
            new_labels[donor] = c;
            sizes[c] = 1;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (v, &l) in vectors.iter().zip(&new_labels) {
            for (s, x) in sums[l].iter_mut().zip(v) {
                *s += x;
            }
        }
        for ((centroid, sum), &size) in centroids.iter_mut().zip(sums).zip(&sizes) {
            *centroid = sum.into_iter().map(|x| x / size as f64).collect();
        }
        labels = new_labels;
        history.push(vectors.iter().zip(&labels).map(|(v, &l)| sq_dist(v, &centroids[l])).sum());
    }

    let inertia = *history.last().expect("at least one iteration runs");
    Ok(ClusterAssignment { labels, centroids, inertia, history })
}
