use serde::{Deserialize, Serialize};

use super::BinaryImage;

/// Euclidean distance from every pixel to the nearest ink pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceField {
    width: usize,
    height: usize,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.dist[y * self.width + x]
    }

    /// Value reported everywhere when the mask has no ink: `width + height`.
    pub fn sentinel(width: usize, height: usize) -> f64 {
        (width + height) as f64
    }
}

/// Exact Euclidean distance transform (Meijster, Roerdink & Hesselink).
///
/// Both passes work on integer squared distances, so the result is the
/// square root of the true minimum squared distance with no approximation.
/// A mask without ink yields [`DistanceField::sentinel`] everywhere.
pub fn distance_transform(bin: &BinaryImage) -> DistanceField {
    let (w, h) = (bin.width(), bin.height());
    if bin.is_empty() {
        return DistanceField { width: w, height: h, dist: vec![DistanceField::sentinel(w, h); w * h] };
    }
    let inf = (w + h) as i64;

    // column pass: g = vertical distance to nearest ink in the same column
    let mut g = vec![0i64; w * h];
    for x in 0..w {
        g[x] = if bin.get(x, 0) { 0 } else { inf };
        for y in 1..h {
            g[y * w + x] = if bin.get(x, y) { 0 } else { (g[(y - 1) * w + x] + 1).min(inf) };
        }
        for y in (0..h.saturating_sub(1)).rev() {
            let below = g[(y + 1) * w + x];
            if below < g[y * w + x] {
                g[y * w + x] = below + 1;
            }
        }
    }

    // row pass: lower envelope of parabolas
    let mut dist = vec![0.0f64; w * h];
    let mut s = vec![0i64; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let gy = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: i64| (x - i) * (x - i) + gy[i as usize] * gy[i as usize];
        let sep = |i: i64, u: i64| {
            let num = u * u - i * i + gy[u as usize] * gy[u as usize] - gy[i as usize] * gy[i as usize];
            num.div_euclid(2 * (u - i))
        };
        let mut q: i64 = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w as i64 {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let wsep = 1 + sep(s[q as usize], u);
                if wsep < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = wsep;
                }
            }
        }
        for u in (0..w as i64).rev() {
            dist[y * w + u as usize] = (f(u, s[q as usize]) as f64).sqrt();
            if u == t[q as usize] {
                q -= 1;
            }
        }
    }
    DistanceField { width: w, height: h, dist }
}
