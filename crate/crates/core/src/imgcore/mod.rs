//! Raster types, image file I/O, preprocessing and the exact Euclidean
//! distance transform.
//!
//! Foreground is ink: dark pixels in a [`GrayImage`] become `true` in a
//! [`BinaryImage`].

mod edt;
mod filter;
mod io;

pub use edt::{distance_transform, DistanceField};
pub use filter::{binarize_otsu, gaussian_filter, gaussian_kernel, otsu_threshold, remove_isolated_pixels};
pub use io::{load_image, save_image, ImageFormat};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("malformed: {0}")]
    Malformed(String),
    #[error("unsupported depth: {0}")]
    UnsupportedDepth(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// 8-bit grayscale raster, row-major, 0 = black ink, 255 = white paper.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be at least 1x1");
        GrayImage { width, height, data: vec![fill; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Malformed(format!("zero dimension {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(ImageError::Malformed(format!(
                "expected {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be at least 1x1");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Copies the `w`x`h` region at (`x`, `y`). Panics if it leaves the image.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> GrayImage {
        assert!(x + w <= self.width && y + h <= self.height, "crop outside image");
        GrayImage::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy))
    }

    /// Pads to `w`x`h` (each at least the current size) by replicating the
    /// last column and row.
    pub fn pad_replicate(&self, w: usize, h: usize) -> GrayImage {
        assert!(w >= self.width && h >= self.height);
        GrayImage::from_fn(w, h, |x, y| self.get(x.min(self.width - 1), y.min(self.height - 1)))
    }

    /// Renders a mask as black ink on white paper.
    pub fn from_binary(bin: &BinaryImage) -> GrayImage {
        GrayImage::from_fn(bin.width(), bin.height(), |x, y| if bin.get(x, y) { 0 } else { 255 })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }
}

/// Boolean raster, row-major, `true` = ink.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage { width, height, mask: vec![false; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, mask: Vec<bool>) -> Result<Self, ImageError> {
        if mask.len() != width * height {
            return Err(ImageError::Malformed(format!(
                "expected {} samples, got {}",
                width * height,
                mask.len()
            )));
        }
        Ok(BinaryImage { width, height, mask })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        BinaryImage { width, height, mask }
    }

    /// Parses rows of `#` (ink) and any other character (background).
    /// All rows must have equal length.
    pub fn from_ascii(rows: &[&str]) -> BinaryImage {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        assert!(rows.iter().all(|r| r.chars().count() == width), "ragged ascii raster");
        let mask = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        BinaryImage { width, height, mask }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.mask[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> BinaryImage {
        assert!(x + w <= self.width && y + h <= self.height, "crop outside image");
        BinaryImage::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy))
    }

    pub fn invert(&self) -> BinaryImage {
        BinaryImage { width: self.width, height: self.height, mask: self.mask.iter().map(|b| !b).collect() }
    }

    /// Tight bounding box of the ink as `(x, y, w, h)`, or `None` when empty.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != usize::MAX).then(|| (x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }
}
