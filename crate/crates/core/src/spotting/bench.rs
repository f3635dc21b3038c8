use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SpotError, Truth, Word};
use crate::corpus::{CorpusError, CorpusManifest, WordTruth};
use crate::imgcore::{binarize_otsu, gaussian_filter, load_image, remove_isolated_pixels, BinaryImage, GrayImage};
use crate::corpus::PageEntry;
use crate::segmenter::{default_smear, normalize_glyph, segment_blocks, segment_chars, segment_lines, BBox, Glyph};

/// Knobs of the preprocess and segment stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    /// Gaussian sigma applied before Otsu binarization.
    pub sigma: f64,
    /// Smearing lengths; `None` estimates them per page.
    pub smear: Option<(usize, usize)>,
    /// Blank rows that separate lines. Must exceed the gap above i and j dots.
    pub min_line_gap: usize,
    /// Blank columns that separate words.
    pub word_gap: usize,
    /// Blank columns that separate characters.
    pub min_char_gap: usize,
    /// Side of normalized glyph grids.
    pub side: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams { sigma: 0.5, smear: None, min_line_gap: 5, word_gap: 8, min_char_gap: 1, side: 32 }
    }
}

/// Gaussian smoothing, Otsu binarization, then isolated-pixel removal.
pub fn preprocess(img: &GrayImage, sigma: f64) -> Result<BinaryImage, SpotError> {
    Ok(remove_isolated_pixels(&binarize_otsu(&gaussian_filter(img, sigma)?)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedWord {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub line: usize,
    pub chars: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSegmentation {
    pub smear: (usize, usize),
    pub blocks: Vec<BBox>,
    pub lines: Vec<BBox>,
    pub words: Vec<SegmentedWord>,
}

impl PageSegmentation {
    pub fn chars(&self) -> impl Iterator<Item = &BBox> {
        self.words.iter().flat_map(|w| &w.chars)
    }
}

/// Blocks, then lines per block, words per line and characters per word.
pub fn segment_page(bin: &BinaryImage, params: &SegmentParams) -> Result<PageSegmentation, SpotError> {
    let smear = params.smear.unwrap_or_else(|| default_smear(bin));
    let blocks = segment_blocks(bin, smear.0, smear.1);
    let mut lines = Vec::new();
    let mut words = Vec::new();
    for block in &blocks {
        for line in segment_lines(bin, block, params.min_line_gap)? {
            for wb in segment_chars(bin, &line, params.word_gap)? {
                let chars = segment_chars(bin, &wb, params.min_char_gap)?;
                words.push(SegmentedWord { bbox: wb, line: lines.len(), chars });
            }
            lines.push(line);
        }
    }
    Ok(PageSegmentation { smear, blocks, lines, words })
}

/// Normalized glyph sequences for every segmented word. Word ids are
/// `<source>/wNNNNN`; glyph ids append `/cNN`.
pub fn extract_words(bin: &BinaryImage, source_id: &str, seg: &PageSegmentation, side: usize) -> Result<Vec<Word>, SpotError> {
    seg.words
        .iter()
        .enumerate()
        .map(|(wi, w)| {
            let id = format!("{source_id}/w{wi:05}");
            let glyphs = w
                .chars
                .iter()
                .enumerate()
                .map(|(ci, c)| {
                    let mut g = normalize_glyph(bin, c, side)?;
                    g.id = format!("{id}/c{ci:02}");
                    g.source_id = source_id.to_string();
                    Ok(g)
                })
                .collect::<Result<Vec<_>, SpotError>>()?;
            Ok(Word { id, source_id: source_id.to_string(), bbox: w.bbox, glyphs, label: None })
        })
        .collect()
}

/// For each segmented box, the ground-truth word it overlaps best with
/// IoU >= 0.5.
pub fn match_words(segmented: &[BBox], truth: &[WordTruth]) -> Vec<Option<usize>> {
    segmented
        .iter()
        .map(|b| {
            truth
                .iter()
                .enumerate()
                .map(|(i, t)| (i, b.iou(&t.bbox)))
                .filter(|&(_, iou)| iou >= 0.5)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
        })
        .collect()
}

pub fn load_tier_image(root: &Path, images: &BTreeMap<String, String>, tier: &str) -> Result<GrayImage, SpotError> {
    let rel = images
        .get(tier)
        .ok_or_else(|| CorpusError::Manifest(format!("no image for tier '{tier}'")))?;
    Ok(load_image(root.join(rel))?)
}

/// Everything needed to score word spotting on one degradation tier.
#[derive(Debug, Clone)]
pub struct WordBenchmark {
    pub tier: String,
    pub pages: Vec<(String, PageSegmentation)>,
    pub corpus: Vec<Word>,
    pub queries: Vec<Word>,
    /// Planted occurrences map to segmented word ids; occurrences that no
    /// segmented word overlaps map to `missing:<page>:<word>` and can only
    /// count as misses.
    pub truth: Truth,
    pub missing: usize,
}

/// Segments every page and query image of `tier` and links planted
/// occurrences to segmented words.
pub fn word_benchmark(root: &Path, manifest: &CorpusManifest, tier: &str, params: &SegmentParams) -> Result<WordBenchmark, SpotError> {
    if manifest.tier(tier).is_none() {
        return Err(CorpusError::Manifest(format!("unknown tier '{tier}'")).into());
    }
    let pages: Vec<(PageSegmentation, Vec<Word>, Vec<Option<usize>>)> = manifest
        .pages
        .par_iter()
        .map(|page| {
            let (bin, seg) = segment_corpus_page(root, page, tier, params)?;
            let mut words = extract_words(&bin, &page.page_id, &seg, params.side)?;
            let boxes: Vec<BBox> = words.iter().map(|w| w.bbox).collect();
            let matched = match_words(&boxes, &page.words);
            for (w, m) in words.iter_mut().zip(&matched) {
                w.label = m.map(|i| page.words[i].text.clone());
            }
            Ok((seg, words, matched))
        })
        .collect::<Result<_, SpotError>>()?;

    let mut located: BTreeMap<(&str, usize), &str> = BTreeMap::new();
    for (page, (_, words, matched)) in manifest.pages.iter().zip(&pages) {
        for (w, m) in words.iter().zip(matched) {
            if let Some(i) = m {
                located.entry((page.page_id.as_str(), *i)).or_insert(w.id.as_str());
            }
        }
    }

    let queries: Vec<Word> = manifest
        .queries
        .par_iter()
        .map(|q| {
            let bin = preprocess(&load_tier_image(root, &q.images, tier)?, params.sigma)?;
            let chars = segment_chars(&bin, &BBox::full(&bin), params.min_char_gap)?;
            let glyphs = chars
                .iter()
                .enumerate()
                .map(|(ci, c)| {
                    let mut g = normalize_glyph(&bin, c, params.side)?;
                    g.id = format!("{}/c{ci:02}", q.query_id);
                    g.source_id = q.query_id.clone();
                    Ok(g)
                })
                .collect::<Result<Vec<_>, SpotError>>()?;
            let bbox = chars.iter().copied().reduce(|a, b| a.union(&b)).unwrap_or_else(|| BBox::full(&bin));
            Ok(Word { id: q.query_id.clone(), source_id: q.query_id.clone(), bbox, glyphs, label: Some(q.text.clone()) })
        })
        .collect::<Result<_, SpotError>>()?;

    let mut truth = Truth::new();
    let mut missing = 0;
    for q in &manifest.queries {
        let set = q
            .occurrences
            .iter()
            .map(|o| {
                located.get(&(o.page_id.as_str(), o.word)).map(|id| id.to_string()).unwrap_or_else(|| {
                    missing += 1;
                    format!("missing:{}:{}", o.page_id, o.word)
                })
            })
            .collect();
        truth.insert(q.query_id.clone(), set);
    }

    drop(located);
    let (segs, words): (Vec<_>, Vec<_>) = pages.into_iter().map(|(s, w, _)| (s, w)).unzip();
    Ok(WordBenchmark {
        tier: tier.to_string(),
        pages: manifest.pages.iter().map(|p| p.page_id.clone()).zip(segs).collect(),
        corpus: words.into_iter().flatten().filter(|w| !w.glyphs.is_empty()).collect(),
        queries: queries.into_iter().filter(|q| !q.glyphs.is_empty()).collect(),
        truth,
        missing,
    })
}

/// Loads, preprocesses and segments one corpus page at `tier`.
pub fn segment_corpus_page(
    root: &Path,
    page: &PageEntry,
    tier: &str,
    params: &SegmentParams,
) -> Result<(BinaryImage, PageSegmentation), SpotError> {
    let bin = preprocess(&load_tier_image(root, &page.images, tier)?, params.sigma)?;
    let seg = segment_page(&bin, params)?;
    Ok((bin, seg))
}

/// Character spotting on one tier: every segmented glyph is in the corpus,
/// labelled from the ground-truth box it overlaps best (IoU >= 0.5).
#[derive(Debug, Clone)]
pub struct CharBenchmark {
    pub tier: String,
    pub corpus: Vec<Glyph>,
    /// One exemplar per letter, taken from the corpus itself.
    pub queries: Vec<Glyph>,
    /// Same-label glyphs in any font.
    pub truth: Truth,
}

/// Builds a [`CharBenchmark`]. Queries are the first glyph of each letter on
/// pages of `query_font`, or of each (font, letter) pair when `None`.
pub fn char_benchmark(
    root: &Path,
    manifest: &CorpusManifest,
    tier: &str,
    params: &SegmentParams,
    query_font: Option<&str>,
) -> Result<CharBenchmark, SpotError> {
    if manifest.tier(tier).is_none() {
        return Err(CorpusError::Manifest(format!("unknown tier '{tier}'")).into());
    }
    let pages: Vec<Vec<Glyph>> = manifest
        .pages
        .par_iter()
        .map(|page| {
            let (bin, seg) = segment_corpus_page(root, page, tier, params)?;
            seg.chars()
                .enumerate()
                .map(|(i, c)| {
                    let mut g = normalize_glyph(&bin, c, params.side)?;
                    g.id = format!("{}/g{i:05}", page.page_id);
                    g.source_id = page.page_id.clone();
                    g.font_id = Some(page.font_id.clone());
                    g.label = page
                        .glyphs
                        .iter()
                        .map(|t| (t, t.bbox.iou(c)))
                        .filter(|&(_, iou)| iou >= 0.5)
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .map(|(t, _)| t.label.clone());
                    Ok(g)
                })
                .collect()
        })
        .collect::<Result<_, SpotError>>()?;
    let corpus: Vec<Glyph> = pages.into_iter().flatten().collect();

    let mut chosen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (i, g) in corpus.iter().enumerate() {
        let (Some(label), Some(font)) = (&g.label, &g.font_id) else { continue };
        if query_font.is_some_and(|f| f != font) {
            continue;
        }
        chosen.entry((font.clone(), label.clone())).or_insert(i);
    }
    let mut by_label: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for g in &corpus {
        if let Some(l) = &g.label {
            by_label.entry(l).or_default().push(&g.id);
        }
    }
    let mut queries = Vec::new();
    let mut truth = Truth::new();
    for &i in chosen.values() {
        let q = corpus[i].clone();
        let label = q.label.as_deref().expect("chosen glyphs are labelled");
        let relevant = by_label[label].iter().filter(|&&id| id != q.id).map(|id| id.to_string()).collect();
        truth.insert(q.id.clone(), relevant);
        queries.push(q);
    }
    if queries.is_empty() {
        return Err(SpotError::EmptyQueries);
    }
    Ok(CharBenchmark { tier: tier.to_string(), corpus, queries, truth })
}
