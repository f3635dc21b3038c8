use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;

use super::CorpusError;
use crate::imgcore::{load_image, save_image, BinaryImage, GrayImage, ImageFormat};

/// Per-font glyph bitmaps for a shared alphabet.
///
/// Bitmaps of one font share a height (the line cell) so glyphs can be
/// stamped top-aligned; each is horizontally tight.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphAtlas {
    alphabet: Vec<char>,
    fonts: BTreeMap<String, BTreeMap<char, BinaryImage>>,
}

pub const FONT_BASE: &str = "base";
pub const FONT_BOLD: &str = "bold";
pub const FONT_CONDENSED: &str = "condensed";
pub const FONT_SHEARED: &str = "sheared";

/// Pixel scale applied to the 5x9 design cells of the built-in atlas.
pub const BUILTIN_SCALE: usize = 3;

// 9 rows per letter: 2 ascender rows, 5 x-height rows, 2 descender rows.
const DESIGN: [(char, [&str; 9]); 26] = [
    ('a', [".....", ".....", ".###.", "....#", ".####", "#...#", ".####", ".....", "....."]),
    ('b', ["#....", "#....", "####.", "#...#", "#...#", "#...#", "####.", ".....", "....."]),
    ('c', [".....", ".....", ".####", "#....", "#....", "#....", ".####", ".....", "....."]),
    ('d', ["....#", "....#", ".####", "#...#", "#...#", "#...#", ".####", ".....", "....."]),
    ('e', [".....", ".....", ".###.", "#...#", "#####", "#....", ".####", ".....", "....."]),
    ('f', ["..##.", ".#...", "####.", ".#...", ".#...", ".#...", ".#...", ".....", "....."]),
    ('g', [".....", ".....", ".####", "#...#", "#...#", "#...#", ".####", "....#", "####."]),
    ('h', ["#....", "#....", "####.", "#...#", "#...#", "#...#", "#...#", ".....", "....."]),
    ('i', [".#...", ".....", "##...", ".#...", ".#...", ".#...", "###..", ".....", "....."]),
    ('j', ["..#..", ".....", ".##..", "..#..", "..#..", "..#..", "..#..", "..#..", "##..."]),
    ('k', ["#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#.", ".....", "....."]),
    ('l', ["##...", ".#...", ".#...", ".#...", ".#...", ".#...", "###..", ".....", "....."]),
    ('m', [".....", ".....", "####.", "#.#.#", "#.#.#", "#.#.#", "#.#.#", ".....", "....."]),
    ('n', [".....", ".....", "####.", "#...#", "#...#", "#...#", "#...#", ".....", "....."]),
    ('o', [".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###.", ".....", "....."]),
    ('p', [".....", ".....", "####.", "#...#", "#...#", "#...#", "####.", "#....", "#...."]),
    ('q', [".....", ".....", ".####", "#...#", "#...#", "#...#", ".####", "....#", "....#"]),
    ('r', [".....", ".....", "#.##.", "##...", "#....", "#....", "#....", ".....", "....."]),
    ('s', [".....", ".....", ".####", "#....", ".###.", "....#", "####.", ".....", "....."]),
    ('t', [".#...", ".#...", "####.", ".#...", ".#...", ".#...", "..##.", ".....", "....."]),
    ('u', [".....", ".....", "#...#", "#...#", "#...#", "#...#", ".####", ".....", "....."]),
    ('v', [".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#..", ".....", "....."]),
    ('w', [".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#.", ".....", "....."]),
    ('x', [".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", ".....", "....."]),
    ('y', [".....", ".....", "#...#", "#...#", "#...#", "#...#", ".####", "....#", "####."]),
    ('z', [".....", ".....", "#####", "...#.", "..#..", ".#...", "#####", ".....", "....."]),
];

/// Drops blank columns on both sides, keeping the full height.
fn trim_columns(b: &BinaryImage) -> BinaryImage {
    let used: Vec<usize> = (0..b.width()).filter(|&x| (0..b.height()).any(|y| b.get(x, y))).collect();
    match (used.first(), used.last()) {
        (Some(&x0), Some(&x1)) => b.crop(x0, 0, x1 - x0 + 1, b.height()),
        _ => b.clone(),
    }
}

fn upscale(b: &BinaryImage, f: usize) -> BinaryImage {
    BinaryImage::from_fn(b.width() * f, b.height() * f, |x, y| b.get(x / f, y / f))
}

/// 8-neighbourhood dilation by one pixel; the raster grows by one pixel on
/// every side.
pub fn dilate(b: &BinaryImage) -> BinaryImage {
    let (w, h) = (b.width() as i64, b.height() as i64);
    BinaryImage::from_fn(b.width() + 2, b.height() + 2, |x, y| {
        let (cx, cy) = (x as i64 - 1, y as i64 - 1);
        (-1..=1).any(|dy| {
            (-1..=1).any(|dx| {
                let (sx, sy) = (cx + dx, cy + dy);
                sx >= 0 && sy >= 0 && sx < w && sy < h && b.get(sx as usize, sy as usize)
            })
        })
    })
}

/// Nearest-neighbour horizontal rescale to `round(width * factor)` columns.
pub fn shrink_horizontal(b: &BinaryImage, factor: f64) -> BinaryImage {
    let nw = ((b.width() as f64 * factor).round() as usize).max(1);
    BinaryImage::from_fn(nw, b.height(), |x, y| {
        let sx = (((x as f64 + 0.5) / factor) as usize).min(b.width() - 1);
        b.get(sx, y)
    })
}

/// Horizontal shear: row `y` moves right by `round(shear * (h - 1 - y))`,
/// leaning the glyph forward.
pub fn shear_horizontal(b: &BinaryImage, shear: f64) -> BinaryImage {
    let h = b.height();
    let offset = |y: usize| (shear * (h - 1 - y) as f64).round() as usize;
    let extra = offset(0);
    BinaryImage::from_fn(b.width() + extra, h, |x, y| {
        let o = offset(y);
        x >= o && x - o < b.width() && b.get(x - o, y)
    })
}

impl GlyphAtlas {
    /// The built-in atlas: 26 lowercase letters in four synthetic fonts
    /// derived from one pixel design (`base`; `bold` = one-pixel dilation;
    /// `condensed` = 25% horizontal shrink; `sheared` = 15% forward shear).
    pub fn builtin() -> GlyphAtlas {
        let mut base = BTreeMap::new();
        for (c, rows) in DESIGN.iter() {
            base.insert(*c, trim_columns(&upscale(&BinaryImage::from_ascii(rows), BUILTIN_SCALE)));
        }
        let derive = |f: &dyn Fn(&BinaryImage) -> BinaryImage| -> BTreeMap<char, BinaryImage> {
            base.iter().map(|(c, b)| (*c, trim_columns(&f(b)))).collect()
        };
        let mut fonts = BTreeMap::new();
        fonts.insert(FONT_BOLD.to_string(), derive(&dilate));
        fonts.insert(FONT_CONDENSED.to_string(), derive(&|b| shrink_horizontal(b, 0.75)));
        fonts.insert(FONT_SHEARED.to_string(), derive(&|b| shear_horizontal(b, 0.15)));
        fonts.insert(FONT_BASE.to_string(), base);
        GlyphAtlas { alphabet: DESIGN.iter().map(|(c, _)| *c).collect(), fonts }
    }

    pub fn from_fonts(fonts: BTreeMap<String, BTreeMap<char, BinaryImage>>) -> Result<GlyphAtlas, CorpusError> {
        let mut alphabet: Vec<char> = fonts.values().flat_map(|m| m.keys().copied()).collect();
        alphabet.sort_unstable();
        alphabet.dedup();
        if fonts.is_empty() || alphabet.is_empty() {
            return Err(CorpusError::Atlas("atlas has no glyphs".into()));
        }
        for (font, glyphs) in &fonts {
            for c in &alphabet {
                match glyphs.get(c) {
                    None => return Err(CorpusError::Atlas(format!("font '{font}' is missing character '{c}'"))),
                    Some(b) if b.is_empty() => {
                        return Err(CorpusError::Atlas(format!("font '{font}' has an empty bitmap for '{c}'")))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(GlyphAtlas { alphabet, fonts })
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn font_ids(&self) -> Vec<&str> {
        self.fonts.keys().map(String::as_str).collect()
    }

    pub fn glyph(&self, font: &str, c: char) -> Option<&BinaryImage> {
        self.fonts.get(font)?.get(&c)
    }

    /// Height of the tallest bitmap in `font`.
    pub fn cell_height(&self, font: &str) -> usize {
        self.fonts.get(font).map_or(0, |m| m.values().map(BinaryImage::height).max().unwrap_or(0))
    }

    /// Writes `<dir>/<font>/<char>.pgm` for every glyph.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        for (font, glyphs) in &self.fonts {
            let fdir = dir.join(font);
            fs::create_dir_all(&fdir).map_err(|e| CorpusError::io(&fdir, e))?;
            for (c, b) in glyphs {
                save_image(&GrayImage::from_binary(b), fdir.join(format!("{c}.pgm")), ImageFormat::Pgm)?;
            }
        }
        Ok(())
    }
}

/// Loads an atlas from per-font subdirectories of `<char>.pgm` bitmaps.
/// Dark pixels (< 128) are ink. Files that are not single-character PGMs
/// are skipped with a warning.
pub fn load_atlas(dir: &Path) -> Result<GlyphAtlas, CorpusError> {
    let mut fonts = BTreeMap::new();
    let mut entries: Vec<_> = fs::read_dir(dir).map_err(|e| CorpusError::io(dir, e))?.collect::<Result<_, _>>().map_err(|e| CorpusError::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if !path.is_dir() {
            warn!("ignoring non-directory atlas entry {}", path.display());
            continue;
        }
        let font = entry.file_name().to_string_lossy().into_owned();
        let mut glyphs = BTreeMap::new();
        let mut files: Vec<_> = fs::read_dir(&path).map_err(|e| CorpusError::io(&path, e))?.collect::<Result<_, _>>().map_err(|e| CorpusError::io(&path, e))?;
        files.sort_by_key(|e| e.file_name());
        for f in files {
            let fp = f.path();
            let stem = fp.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let mut chars = stem.chars();
            let is_glyph = fp.extension().is_some_and(|e| e == "pgm") && chars.next().is_some() && chars.next().is_none();
            if !is_glyph {
                warn!("ignoring unknown atlas file {}", fp.display());
                continue;
            }
            let img = load_image(&fp)?;
            let bin = BinaryImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) < 128);
            glyphs.insert(stem.chars().next().expect("checked above"), bin);
        }
        fonts.insert(font, glyphs);
    }
    GlyphAtlas::from_fonts(fonts)
}
