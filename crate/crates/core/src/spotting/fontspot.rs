use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_tier_image, preprocess, SpotError};
use crate::corpus::{CorpusError, CorpusManifest};
use crate::features::{classify_font_1nn, fractal_signature, wavelet_energy_features, Extractor, FeatureVector};
use crate::imgcore::{gaussian_filter, GrayImage};
use crate::segmenter::{default_smear, segment_blocks, segment_lines};

/// Which rendition of a page the font features are computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FontImage {
    /// The page as stored.
    Raw,
    /// After the preprocessing Gaussian.
    Smoothed,
    /// The cleaned binary page, ink 0 and paper 255.
    Binary,
}

impl FromStr for FontImage {
    type Err = SpotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(FontImage::Raw),
            "smoothed" => Ok(FontImage::Smoothed),
            "binary" => Ok(FontImage::Binary),
            other => Err(SpotError::InvalidParameter(format!("unknown page image '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FontspotParams {
    /// Side of the square text windows tiled over each block.
    pub window: usize,
    /// Fractal signature grid.
    pub k: usize,
    /// Wavelet decomposition depth.
    pub levels: usize,
    pub sigma: f64,
    pub image: FontImage,
    /// Rows between the tops of consecutive tiles cut from the scroll.
    pub stride: usize,
    /// Blank columns kept between characters when packing texture tiles.
    pub gap: usize,
    /// Tiles with a smaller ink fraction are dropped.
    pub min_ink: f64,
}

impl Default for FontspotParams {
    fn default() -> Self {
        FontspotParams { window: 256, stride: 64, k: 4, levels: 4, sigma: 0.5, image: FontImage::Binary, gap: 3, min_ink: 0.05 }
    }
}

/// Square texture tiles of a page's text. Each segmented line is cropped,
/// blank column runs are shortened to `gap` columns, and the strips are
/// packed row by row into a `window`-wide scroll that is cut into
/// `window`-sided tiles every `stride` rows.
pub fn font_windows(page: &GrayImage, params: &FontspotParams) -> Result<Vec<GrayImage>, SpotError> {
    if params.window == 0 || params.stride == 0 {
        return Err(SpotError::InvalidParameter("window and stride must be positive".into()));
    }
    let bin = preprocess(page, params.sigma)?;
    let source = match params.image {
        FontImage::Raw => page.clone(),
        FontImage::Smoothed => gaussian_filter(page, params.sigma)?,
        FontImage::Binary => GrayImage::from_binary(&bin),
    };
    let (sh, sv) = default_smear(&bin);
    let w = params.window;
    // scroll rows as (source pixels, ink flags), each `w` wide
    let mut rows: Vec<(Vec<u8>, Vec<bool>)> = Vec::new();
    let mut row_top = 0;
    let (mut x, mut row_h) = (0, 0);
    for block in segment_blocks(&bin, sh, sv) {
        for line in segment_lines(&bin, &block, TEXTURE_LINE_GAP)? {
            let mut blank = 0;
            for cx in line.x..line.right() {
                let occupied = (line.y..line.bottom()).any(|cy| bin.get(cx, cy));
                blank = if occupied { 0 } else { blank + 1 };
                if blank > params.gap {
                    continue;
                }
                if x == w {
                    (x, row_top, row_h) = (0, row_top + row_h, 0);
                }
                if rows.len() < row_top + line.h {
                    rows.resize(row_top + line.h, (vec![255; w], vec![false; w]));
                }
                for cy in 0..line.h {
                    let row = &mut rows[row_top + cy];
                    row.0[x] = source.get(cx, line.y + cy);
                    row.1[x] = bin.get(cx, line.y + cy);
                }
                row_h = row_h.max(line.h);
                x += 1;
            }
        }
    }
    // the final row is usually partial
    rows.truncate(row_top);
    let mut tiles = Vec::new();
    let mut y = 0;
    while y + w <= rows.len() {
        let ink: usize = rows[y..y + w].iter().map(|r| r.1.iter().filter(|&&b| b).count()).sum();
        if ink as f64 >= params.min_ink * (w * w) as f64 {
            tiles.push(GrayImage::from_fn(w, w, |tx, ty| rows[y + ty].0[tx]));
        }
        y += params.stride;
    }
    Ok(tiles)
}

// Blank rows separating lines while building textures; wide enough to keep
// i and j dots with their line.
const TEXTURE_LINE_GAP: usize = 5;

/// The features of one texture tile.
pub fn window_features(img: &GrayImage, extractor: Extractor, params: &FontspotParams) -> Result<FeatureVector, SpotError> {
    Ok(match extractor {
        Extractor::FractalSig => fractal_signature(img, params.k)?,
        Extractor::WaveletEnergy => wavelet_energy_features(img, params.levels)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorAccuracy {
    pub extractor: Extractor,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[truth][predicted]` counts.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FontspotReport {
    pub train_tier: String,
    pub test_tier: String,
    pub params: FontspotParams,
    pub train_windows: usize,
    pub test_windows: usize,
    pub results: Vec<ExtractorAccuracy>,
}

impl FontspotReport {
    pub fn accuracy(&self, e: Extractor) -> Option<f64> {
        self.results.iter().find(|r| r.extractor == e).map(|r| r.accuracy)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("font recognition, train {} / test {}\n", self.train_tier, self.test_tier);
        for r in &self.results {
            s.push_str(&format!("{:<16}{:>10.2}%{:>8} / {}\n", r.extractor.name(), 100.0 * r.accuracy, r.correct, r.total));
        }
        s
    }
}

/// 1-NN font recognition over text windows. Within each font, pages
/// alternate between training (rendered at `train_tier`) and testing
/// (rendered at `test_tier`); a font with a single page alternates windows
/// instead.
pub fn fontspot_eval(
    root: &Path,
    manifest: &CorpusManifest,
    train_tier: &str,
    test_tier: &str,
    extractors: &[Extractor],
    params: &FontspotParams,
) -> Result<FontspotReport, SpotError> {
    for t in [train_tier, test_tier] {
        if manifest.tier(t).is_none() {
            return Err(CorpusError::Manifest(format!("unknown tier '{t}'")).into());
        }
    }
    let mut by_font: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in manifest.pages.iter().enumerate() {
        by_font.entry(p.font_id.as_str()).or_default().push(i);
    }
    // (page index, tier, keep windows with this parity or all)
    let mut jobs: Vec<(usize, bool, Option<usize>)> = Vec::new();
    for pages in by_font.values() {
        if pages.len() == 1 {
            jobs.push((pages[0], true, Some(0)));
            jobs.push((pages[0], false, Some(1)));
        } else {
            jobs.extend(pages.iter().enumerate().map(|(j, &p)| (p, j % 2 == 0, None)));
        }
    }
    let windows: Vec<(bool, String, Vec<GrayImage>)> = jobs
        .par_iter()
        .map(|&(pi, train, parity)| {
            let page = &manifest.pages[pi];
            let img = load_tier_image(root, &page.images, if train { train_tier } else { test_tier })?;
            let ws = font_windows(&img, params)?
                .into_iter()
                .enumerate()
                .filter(|(i, _)| parity.is_none_or(|p| i % 2 == p))
                .map(|(_, w)| w)
                .collect();
            Ok((train, page.font_id.clone(), ws))
        })
        .collect::<Result<_, SpotError>>()?;
    let flat = |want: bool| -> Vec<(String, &GrayImage)> {
        windows.iter().filter(|(t, ..)| *t == want).flat_map(|(_, f, ws)| ws.iter().map(move |w| (f.clone(), w))).collect()
    };
    let (train, test) = (flat(true), flat(false));
    if train.is_empty() || test.is_empty() {
        return Err(SpotError::InvalidParameter("no text windows; reduce the window size".into()));
    }
    let mut results = Vec::new();
    for &e in extractors {
        let features = |set: &[(String, &GrayImage)]| -> Result<Vec<(String, FeatureVector)>, SpotError> {
            set.par_iter().map(|(f, w)| Ok((f.clone(), window_features(w, e, params)?))).collect()
        };
        let (tr, te) = (features(&train)?, features(&test)?);
        let predictions: Vec<String> =
            te.par_iter().map(|(_, v)| classify_font_1nn(v, &tr).map(str::to_string)).collect::<Result<_, _>>()?;
        let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut correct = 0;
        for ((truth, _), pred) in te.iter().zip(&predictions) {
            correct += usize::from(truth == pred);
            *confusion.entry(truth.clone()).or_default().entry(pred.clone()).or_default() += 1;
        }
        results.push(ExtractorAccuracy { extractor: e, accuracy: correct as f64 / te.len() as f64, correct, total: te.len(), confusion });
    }
    Ok(FontspotReport {
        train_tier: train_tier.to_string(),
        test_tier: test_tier.to_string(),
        params: *params,
        train_windows: train.len(),
        test_windows: test.len(),
        results,
    })
}
