use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_inside, tight_box, BBox, SegmentError};
use crate::imgcore::{load_image, save_image, BinaryImage, GrayImage, ImageFormat};

/// A segmented character normalized to an `N`x`N` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    pub id: String,
    pub source_id: String,
    pub bbox: BBox,
    pub grid: BinaryImage,
    pub label: Option<String>,
    pub font_id: Option<String>,
}

impl Glyph {
    pub fn side(&self) -> usize {
        self.grid.width()
    }

    /// Wraps an existing square grid, e.g. a test fixture.
    pub fn from_grid(id: impl Into<String>, grid: BinaryImage) -> Glyph {
        assert_eq!(grid.width(), grid.height(), "glyph grids are square");
        Glyph {
            id: id.into(),
            source_id: String::new(),
            bbox: BBox::new(0, 0, grid.width(), grid.height()),
            grid,
            label: None,
            font_id: None,
        }
    }
}

/// Normalizes the ink inside `region` into a glyph with an empty id; the
/// glyph's box is the tight box of that ink. See [`normalize_grid`].
pub fn normalize_glyph(bin: &BinaryImage, region: &BBox, side: usize) -> Result<Glyph, SegmentError> {
    let grid = normalize_grid(bin, region, side)?;
    let bbox = tight_box(bin, region).expect("normalize_grid rejects empty regions");
    Ok(Glyph { id: String::new(), source_id: String::new(), bbox, grid, label: None, font_id: None })
}

/// Crops the ink inside `region`, scales it with nearest-neighbour sampling
/// so its longer side is `side`, and centres it on a blank `side`x`side`
/// grid. Odd margins put the extra pixel on the right/bottom.
///
/// When the crop is upscaled every source pixel is sampled, so
/// re-normalizing the result reproduces it exactly.
pub fn normalize_grid(bin: &BinaryImage, region: &BBox, side: usize) -> Result<BinaryImage, SegmentError> {
    check_inside(bin, region)?;
    let tight = tight_box(bin, region).ok_or(SegmentError::EmptyBox(*region))?;
    let longest = tight.w.max(tight.h);
    let scaled = |len: usize| ((len * side + longest / 2) / longest).clamp(1, side);
    let (nw, nh) = (scaled(tight.w), scaled(tight.h));
    let (left, top) = ((side - nw) / 2, (side - nh) / 2);
    Ok(BinaryImage::from_fn(side, side, |x, y| {
        if x < left || y < top || x >= left + nw || y >= top + nh {
            return false;
        }
        // sample at pixel centres
        let sx = ((2 * (x - left) + 1) * tight.w) / (2 * nw);
        let sy = ((2 * (y - top) + 1) * tight.h) / (2 * nh);
        bin.get(tight.x + sx, tight.y + sy)
    }))
}

/// One entry of a glyph-set manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphRecord {
    pub id: String,
    pub source_id: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub label: Option<String>,
    pub font_id: Option<String>,
    pub grid: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GlyphManifest {
    side: usize,
    glyphs: Vec<GlyphRecord>,
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `<dir>/<id>.pgm` grids plus `<dir>/glyphs.json`.
pub fn write_glyph_set(dir: &Path, glyphs: &[Glyph]) -> Result<(), SegmentError> {
    fs::create_dir_all(dir).map_err(|e| SegmentError::Manifest(format!("{}: {e}", dir.display())))?;
    let side = glyphs.first().map_or(0, Glyph::side);
    let mut records = Vec::with_capacity(glyphs.len());
    for (i, g) in glyphs.iter().enumerate() {
        if g.side() != side {
            return Err(SegmentError::Manifest(format!("glyph {} has side {}, expected {side}", g.id, g.side())));
        }
        let name = format!("{:06}_{}.pgm", i, file_stem(&g.id));
        save_image(&GrayImage::from_binary(&g.grid), dir.join(&name), ImageFormat::Pgm)?;
        records.push(GlyphRecord {
            id: g.id.clone(),
            source_id: g.source_id.clone(),
            bbox: g.bbox,
            label: g.label.clone(),
            font_id: g.font_id.clone(),
            grid: name,
        });
    }
    let json = serde_json::to_string_pretty(&GlyphManifest { side, glyphs: records })
        .map_err(|e| SegmentError::Manifest(e.to_string()))?;
    fs::write(dir.join("glyphs.json"), json).map_err(|e| SegmentError::Manifest(e.to_string()))
}

pub fn read_glyph_set(dir: &Path) -> Result<Vec<Glyph>, SegmentError> {
    let text = fs::read_to_string(dir.join("glyphs.json"))
        .map_err(|e| SegmentError::Manifest(format!("{}: {e}", dir.join("glyphs.json").display())))?;
    let manifest: GlyphManifest = serde_json::from_str(&text).map_err(|e| SegmentError::Manifest(e.to_string()))?;
    manifest
        .glyphs
        .into_iter()
        .map(|r| {
            let img = load_image(dir.join(&r.grid))?;
            if img.width() != manifest.side || img.height() != manifest.side {
                return Err(SegmentError::Manifest(format!("{} is not {}x{}", r.grid, manifest.side, manifest.side)));
            }
            let grid = BinaryImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) < 128);
            Ok(Glyph { id: r.id, source_id: r.source_id, bbox: r.bbox, grid, label: r.label, font_id: r.font_id })
        })
        .collect()
}
