use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::imgcore::GrayImage;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    /// Standard deviation of additive Gaussian noise, in gray levels.
    pub noise_sigma: f64,
    /// Block size of the box-average downsample (1 = none). The result is
    /// upsampled back to the original size by replication.
    pub downsample_factor: usize,
    /// Per-pixel probability of salt-and-pepper replacement.
    pub speckle_rate: f64,
}

impl Degradation {
    pub const NONE: Degradation = Degradation { noise_sigma: 0.0, downsample_factor: 1, speckle_rate: 0.0 };

    fn validate(&self) -> Result<(), CorpusError> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(CorpusError::InvalidParameter(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if self.downsample_factor == 0 {
            return Err(CorpusError::InvalidParameter("downsample_factor must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.speckle_rate) {
            return Err(CorpusError::InvalidParameter(format!("speckle_rate must be in [0, 1], got {}", self.speckle_rate)));
        }
        Ok(())
    }
}

/// Applies noise, then block downsampling, then speckle. Identity when all
/// three are off.
pub fn degrade(img: &GrayImage, d: &Degradation, seed: u64) -> Result<GrayImage, CorpusError> {
    d.validate()?;
    let mut out = img.clone();
    let mut rng = rng::rng_from(seed);
    if d.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, d.noise_sigma).map_err(|e| CorpusError::InvalidParameter(e.to_string()))?;
        for v in out.data_mut() {
            let n: f64 = normal.sample(&mut rng);
            *v = (f64::from(*v) + n + 0.5).floor().clamp(0.0, 255.0) as u8;
        }
    }
    let f = d.downsample_factor;
    if f > 1 {
        let (w, h) = (out.width(), out.height());
        let src = out.clone();
        for by in (0..h).step_by(f) {
            for bx in (0..w).step_by(f) {
                let (x1, y1) = ((bx + f).min(w), (by + f).min(h));
                let n = ((x1 - bx) * (y1 - by)) as u32;
                let sum: u32 = (by..y1).flat_map(|y| (bx..x1).map(move |x| (x, y))).map(|(x, y)| u32::from(src.get(x, y))).sum();
                let avg = ((sum + n / 2) / n) as u8;
                for y in by..y1 {
                    for x in bx..x1 {
                        out.set(x, y, avg);
                    }
                }
            }
        }
    }
    if d.speckle_rate > 0.0 {
        for v in out.data_mut() {
            if rng.random_bool(d.speckle_rate) {
                *v = if rng.random_bool(0.5) { 0 } else { 255 };
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(sigma: f64) -> Degradation {
        Degradation { noise_sigma: sigma, ..Degradation::NONE }
    }

    #[test]
    fn identity_when_off() {
        let img = GrayImage::from_fn(17, 9, |x, y| (x * 13 + y * 7) as u8);
        assert_eq!(degrade(&img, &Degradation::NONE, 5).unwrap(), img);
    }

    #[test]
    fn noise_statistics() {
        let img = GrayImage::new(256, 256, 128);
        let out = degrade(&img, &noise(10.0), 42).unwrap();
        let n = out.data().len() as f64;
        let mean = out.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = out.data().iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 128.0).abs() <= 1.0, "mean {mean}");
        assert!((var.sqrt() - 10.0).abs() <= 1.0, "std {}", var.sqrt());
    }

    #[test]
    fn seeded() {
        let img = GrayImage::new(40, 30, 200);
        let d = Degradation { noise_sigma: 15.0, downsample_factor: 2, speckle_rate: 0.01 };
        assert_eq!(degrade(&img, &d, 7).unwrap(), degrade(&img, &d, 7).unwrap());
        assert_ne!(degrade(&img, &d, 7).unwrap(), degrade(&img, &d, 8).unwrap());
    }

    #[test]
    fn downsample_blocks() {
        let img = GrayImage::from_vec(3, 2, vec![0, 255, 10, 255, 255, 20]).unwrap();
        let d = Degradation { downsample_factor: 2, ..Degradation::NONE };
        let out = degrade(&img, &d, 0).unwrap();
        assert_eq!(out.data(), &[191, 191, 15, 191, 191, 15]);
    }

    #[test]
    fn downsampling_softens_a_thin_stroke() {
        let img = GrayImage::from_fn(16, 16, |x, _| if x == 7 { 0 } else { 255 });
        let d = Degradation { downsample_factor: 2, ..Degradation::NONE };
        let out = degrade(&img, &d, 0).unwrap();
        let band = |im: &GrayImage, y: usize| (6..=8).map(|x| im.get(x, y)).collect::<Vec<_>>();
        for y in 0..16 {
            let (a, b) = (band(&img, y), band(&out, y));
            let range = |v: &[u8]| v.iter().max().unwrap() - v.iter().min().unwrap();
            assert!(range(&b) < range(&a), "row {y}: {b:?}");
            assert!(b.iter().any(|&v| v < 255), "stroke survives");
        }
    }

    #[test]
    fn speckle_rate_full() {
        let img = GrayImage::new(50, 50, 128);
        let d = Degradation { speckle_rate: 1.0, ..Degradation::NONE };
        let out = degrade(&img, &d, 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 0 || v == 255));
        let black = out.data().iter().filter(|&&v| v == 0).count();
        assert!((1000..1500).contains(&black));
    }

    #[test]
    fn invalid() {
        let img = GrayImage::new(4, 4, 0);
        assert!(degrade(&img, &noise(-1.0), 0).is_err());
        assert!(degrade(&img, &Degradation { downsample_factor: 0, ..Degradation::NONE }, 0).is_err());
        assert!(degrade(&img, &Degradation { speckle_rate: 1.5, ..Degradation::NONE }, 0).is_err());
    }
}
