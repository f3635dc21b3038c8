use super::{Extractor, FeatureError, FeatureParams, FeatureVector};
use crate::imgcore::GrayImage;

/// Unnormalized energies of an `levels`-level orthonormal Haar transform:
/// `[LH_1, HL_1, HH_1, ..., LH_L, HL_L, HH_L, LL_L]`.
///
/// The image is replicate-padded so both sides are multiples of `2^levels`.
/// By Parseval the entries sum to the energy of the padded image.
pub fn haar_subband_energies(img: &GrayImage, levels: usize) -> Result<Vec<f64>, FeatureError> {
    if levels == 0 {
        return Err(FeatureError::InvalidParameter("levels must be >= 1".into()));
    }
    let (w, h) = (img.width(), img.height());
    if levels >= usize::BITS as usize || (1usize << levels) > w.min(h) {
        return Err(FeatureError::TooSmall {
            width: w,
            height: h,
            reason: format!("{levels} levels need a side of at least {}", 1u128 << levels.min(127)),
        });
    }
    let unit = 1usize << levels;
    let (pw, ph) = (w.div_ceil(unit) * unit, h.div_ceil(unit) * unit);
    let padded = img.pad_replicate(pw, ph);
    let mut band: Vec<f64> = padded.data().iter().map(|&v| v as f64).collect();
    let (mut cw, mut ch) = (pw, ph);
    let mut energies = Vec::with_capacity(3 * levels + 1);
    for _ in 0..levels {
        let (nw, nh) = (cw / 2, ch / 2);
        let mut ll = vec![0.0; nw * nh];
        let (mut e_lh, mut e_hl, mut e_hh) = (0.0, 0.0, 0.0);
        for y in 0..nh {
            for x in 0..nw {
                let p = band[(2 * y) * cw + 2 * x];
                let q = band[(2 * y) * cw + 2 * x + 1];
                let r = band[(2 * y + 1) * cw + 2 * x];
                let s = band[(2 * y + 1) * cw + 2 * x + 1];
                ll[y * nw + x] = (p + q + r + s) / 2.0;
                let lh = (p + q - r - s) / 2.0;
                let hl = (p - q + r - s) / 2.0;
                let hh = (p - q - r + s) / 2.0;
                e_lh += lh * lh;
                e_hl += hl * hl;
                e_hh += hh * hh;
            }
        }
        energies.extend([e_lh, e_hl, e_hh]);
        band = ll;
        cw = nw;
        ch = nh;
    }
    energies.push(band.iter().map(|v| v * v).sum());
    Ok(energies)
}

/// Haar sub-band energies normalized to sum to one. An all-black image has
/// no energy and maps to pure approximation.
pub fn wavelet_energy_features(img: &GrayImage, levels: usize) -> Result<FeatureVector, FeatureError> {
    let mut values = haar_subband_energies(img, levels)?;
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        values.iter_mut().for_each(|v| *v /= total);
    } else {
        let n = values.len();
        values.iter_mut().for_each(|v| *v = 0.0);
        values[n - 1] = 1.0;
    }
    Ok(FeatureVector {
        extractor: Extractor::WaveletEnergy,
        values,
        params: FeatureParams { k: None, levels: Some(levels), side: Some(img.width().max(img.height())) },
    })
}
