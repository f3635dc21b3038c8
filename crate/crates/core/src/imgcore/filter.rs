use super::{BinaryImage, GrayImage, ImageError};

/// Normalized 1-D Gaussian weights for offsets `-r..=r`, `r = ceil(3 sigma)`.
/// `sigma == 0` gives the identity kernel `[1.0]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

#[inline]
fn round_half_up(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Separable Gaussian smoothing with clamp-to-edge borders.
pub fn gaussian_filter(img: &GrayImage, sigma: f64) -> Result<GrayImage, ImageError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(ImageError::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);

    let mut horiz = vec![0.0f64; img.data().len()];
    for y in 0..h {
        let row = &img.data()[(y * w) as usize..((y + 1) * w) as usize];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in kernel.iter().enumerate() {
                let sx = (x + k as i64 - r).clamp(0, w - 1);
                acc += wt * row[sx as usize] as f64;
            }
            horiz[(y * w + x) as usize] = acc;
        }
    }

    let mut out = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in kernel.iter().enumerate() {
                let sy = (y + k as i64 - r).clamp(0, h - 1);
                acc += wt * horiz[(sy * w + x) as usize];
            }
            out.push(round_half_up(acc));
        }
    }
    GrayImage::from_vec(img.width(), img.height(), out)
}

/// Otsu threshold `T` such that ink is `intensity < T`.
///
/// Returns `None` when the histogram has a single occupied level, since
/// then no split has positive between-class variance. Ties go to the
/// smallest `T`.
pub fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best: Option<(u8, f64)> = None;
    for t in 1..=255usize {
        n0 += hist[t - 1];
        s0 += (t as u64 - 1) * hist[t - 1];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        // (s0*n1 - s1*n0)^2 / (n0*n1) is proportional to the between-class variance
        let diff = (s0 as i128 * n1 as i128 - s1 as i128 * n0 as i128) as f64;
        let var = diff * diff / (n0 as f64 * n1 as f64);
        if var > 0.0 && best.is_none_or(|(_, b)| var > b) {
            best = Some((t as u8, var));
        }
    }
    best.map(|(t, _)| t)
}

/// Global Otsu binarization; a single-level image is all background.
pub fn binarize_otsu(img: &GrayImage) -> BinaryImage {
    match otsu_threshold(img) {
        Some(t) => BinaryImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) < t),
        None => BinaryImage::new(img.width(), img.height()),
    }
}

/// Clears every ink pixel that has no ink among its 8 neighbours. One
/// parallel pass over the input; removals do not cascade.
pub fn remove_isolated_pixels(bin: &BinaryImage) -> BinaryImage {
    let (w, h) = (bin.width() as i64, bin.height() as i64);
    BinaryImage::from_fn(bin.width(), bin.height(), |x, y| {
        if !bin.get(x, y) {
            return false;
        }
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h && bin.get(nx as usize, ny as usize) {
                    return true;
                }
            }
        }
        false
    })
}
