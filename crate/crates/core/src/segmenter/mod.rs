//! Page decomposition into blocks, lines and characters, and glyph
//! normalization.
//!
//! Characters are separated purely by blank columns; touching characters
//! stay merged in one box.

mod glyph;

pub use glyph::{normalize_glyph, normalize_grid, read_glyph_set, write_glyph_set, Glyph, GlyphRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgcore::{BinaryImage, ImageError};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("box {0:?} contains no ink")]
    EmptyBox(BBox),
    #[error("box {0:?} lies outside the {1}x{2} image")]
    OutOfBounds(BBox, usize, usize),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("glyph set: {0}")]
    Manifest(String),
}

/// Axis-aligned box, top-left origin, `w, h >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        BBox { x, y, w, h }
    }

    pub fn full(bin: &BinaryImage) -> Self {
        BBox::new(0, 0, bin.width(), bin.height())
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }

    pub fn intersection(&self, other: &BBox) -> usize {
        let w = self.right().min(other.right()).saturating_sub(self.x.max(other.x));
        let h = self.bottom().min(other.bottom()).saturating_sub(self.y.max(other.y));
        w * h
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection(other);
        inter as f64 / (self.area() + other.area() - inter) as f64
    }

    pub fn contains(&self, other: &BBox) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        BBox::new(x, y, self.right().max(other.right()) - x, self.bottom().max(other.bottom()) - y)
    }
}

fn check_inside(bin: &BinaryImage, b: &BBox) -> Result<(), SegmentError> {
    if b.fits_in(bin.width(), bin.height()) {
        Ok(())
    } else {
        Err(SegmentError::OutOfBounds(*b, bin.width(), bin.height()))
    }
}

/// Tight box around the ink of `bin` restricted to `region`.
pub fn tight_box(bin: &BinaryImage, region: &BBox) -> Option<BBox> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in region.y..region.bottom() {
        for x in region.x..region.right() {
            if bin.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    (x0 != usize::MAX).then(|| BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
}

/// Fills background runs shorter than `len` that have ink on both ends.
fn smear_runs(line: &mut [bool], len: usize) {
    let mut last_ink: Option<usize> = None;
    for i in 0..line.len() {
        if line[i] {
            if let Some(j) = last_ink {
                let gap = i - j - 1;
                if gap > 0 && gap < len {
                    line[j + 1..i].iter_mut().for_each(|b| *b = true);
                }
            }
            last_ink = Some(i);
        }
    }
}

/// Horizontal then vertical run-length smearing.
pub fn smear(bin: &BinaryImage, smear_h: usize, smear_v: usize) -> BinaryImage {
    let (w, h) = (bin.width(), bin.height());
    let mut mask = bin.mask().to_vec();
    for row in mask.chunks_mut(w) {
        smear_runs(row, smear_h);
    }
    let mut col = vec![false; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = mask[y * w + x];
        }
        smear_runs(&mut col, smear_v);
        for y in 0..h {
            mask[y * w + x] = col[y];
        }
    }
    BinaryImage::from_vec(w, h, mask).expect("same dimensions")
}

/// Minimum number of original ink pixels for a block to be reported.
pub const MIN_BLOCK_PIXELS: usize = 4;

/// Text blocks by run-length smearing and 8-connected components.
///
/// Each block is the tight box of the original ink in its component;
/// blocks are ordered top-to-bottom, then left-to-right.
pub fn segment_blocks(bin: &BinaryImage, smear_h: usize, smear_v: usize) -> Vec<BBox> {
    let smeared = smear(bin, smear_h, smear_v);
    let (w, h) = (bin.width(), bin.height());
    let mut label = vec![usize::MAX; w * h];
    let mut blocks = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !smeared.mask()[start] || label[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        label[start] = id;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut ink = 0usize;
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            if bin.mask()[p] {
                ink += 1;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let q = ny * w + nx;
                    if smeared.mask()[q] && label[q] == usize::MAX {
                        label[q] = id;
                        stack.push(q);
                    }
                }
            }
        }
        if ink > 0 {
            blocks.push((ink, BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)));
        }
    }
    let mut out: Vec<BBox> = blocks.into_iter().filter(|(ink, _)| *ink >= MIN_BLOCK_PIXELS).map(|(_, b)| b).collect();
    out.sort_by_key(|b| (b.y, b.x));
    out
}

/// Maximal runs of `true` in `occupied`, joined across `false` runs shorter
/// than `min_gap`. Returns half-open index ranges.
fn occupied_runs(occupied: &[bool], min_gap: usize) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < occupied.len() {
        if !occupied[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < occupied.len() && occupied[i] {
            i += 1;
        }
        match runs.last_mut() {
            Some(last) if start - last.1 < min_gap => last.1 = i,
            _ => runs.push((start, i)),
        }
    }
    runs
}

/// Default blank-row run that separates two lines.
pub const DEFAULT_MIN_LINE_GAP: usize = 1;

/// Lines inside `block` from its horizontal projection profile.
pub fn segment_lines(bin: &BinaryImage, block: &BBox, min_line_gap: usize) -> Result<Vec<BBox>, SegmentError> {
    check_inside(bin, block)?;
    let rows: Vec<bool> =
        (block.y..block.bottom()).map(|y| (block.x..block.right()).any(|x| bin.get(x, y))).collect();
    Ok(occupied_runs(&rows, min_line_gap.max(1))
        .into_iter()
        .filter_map(|(a, b)| tight_box(bin, &BBox::new(block.x, block.y + a, block.w, b - a)))
        .collect())
}

/// Characters inside `line` separated by runs of at least `min_gap` blank
/// columns, left to right.
pub fn segment_chars(bin: &BinaryImage, line: &BBox, min_gap: usize) -> Result<Vec<BBox>, SegmentError> {
    check_inside(bin, line)?;
    let cols: Vec<bool> = (line.x..line.right()).map(|x| (line.y..line.bottom()).any(|y| bin.get(x, y))).collect();
    Ok(occupied_runs(&cols, min_gap.max(1))
        .into_iter()
        .filter_map(|(a, b)| tight_box(bin, &BBox::new(line.x + a, line.y, b - a, line.h)))
        .collect())
}

/// Median length of horizontal ink runs, used as a stroke-width estimate.
pub fn estimate_stroke_width(bin: &BinaryImage) -> usize {
    let mut runs = Vec::new();
    for y in 0..bin.height() {
        let mut len = 0;
        for x in 0..bin.width() {
            if bin.get(x, y) {
                len += 1;
            } else if len > 0 {
                runs.push(len);
                len = 0;
            }
        }
        if len > 0 {
            runs.push(len);
        }
    }
    median(&mut runs).unwrap_or(1).max(1)
}

/// Median blank-row run between inked rows of the whole page.
pub fn estimate_line_gap(bin: &BinaryImage) -> usize {
    let rows: Vec<bool> = (0..bin.height()).map(|y| (0..bin.width()).any(|x| bin.get(x, y))).collect();
    let runs = occupied_runs(&rows, 1);
    let mut gaps: Vec<usize> = runs.windows(2).map(|p| p[1].0 - p[0].1).collect();
    median(&mut gaps).unwrap_or(1).max(1)
}

/// Median height of inked row runs across the whole page.
pub fn estimate_line_height(bin: &BinaryImage) -> usize {
    let rows: Vec<bool> = (0..bin.height()).map(|y| (0..bin.width()).any(|x| bin.get(x, y))).collect();
    let mut heights: Vec<usize> = occupied_runs(&rows, 1).into_iter().map(|(a, b)| b - a).collect();
    median(&mut heights).unwrap_or(1)
}

fn median(v: &mut [usize]) -> Option<usize> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

/// Smearing lengths used when none are given: horizontally eight stroke
/// widths but at least one line height, vertically two inter-line gaps.
pub fn default_smear(bin: &BinaryImage) -> (usize, usize) {
    ((8 * estimate_stroke_width(bin)).max(estimate_line_height(bin)), 2 * estimate_line_gap(bin))
}
