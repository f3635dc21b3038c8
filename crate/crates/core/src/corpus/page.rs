use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{CorpusError, GlyphAtlas};
use crate::imgcore::GrayImage;
use crate::rng;
use crate::segmenter::BBox;

/// Geometry of a synthesized page, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub page_width: usize,
    pub page_height: usize,
    pub margin: usize,
    /// Blank columns between the bitmaps of adjacent characters in a word.
    pub glyph_gap: usize,
    pub word_gap: usize,
    /// Extra word spacing drawn uniformly from `0..=word_gap_jitter`.
    pub word_gap_jitter: usize,
    /// Blank rows between line cells.
    pub line_gap: usize,
    /// Additional blank rows before a new paragraph.
    pub paragraph_gap: usize,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            page_width: 1100,
            page_height: 1000,
            margin: 32,
            glyph_gap: 3,
            word_gap: 15,
            word_gap_jitter: 6,
            line_gap: 9,
            paragraph_gap: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphTruth {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub label: String,
    /// Index into the page's `words`.
    pub word: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTruth {
    pub text: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub line: usize,
}

/// Ground truth for one rendered page. `images` maps a degradation tier
/// name to the image path relative to the corpus root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageEntry {
    pub page_id: String,
    pub font_id: String,
    pub width: usize,
    pub height: usize,
    pub glyphs: Vec<GlyphTruth>,
    pub words: Vec<WordTruth>,
    pub lines: Vec<BBox>,
    pub blocks: Vec<BBox>,
    #[serde(default)]
    pub images: std::collections::BTreeMap<String, String>,
}

fn word_glyphs<'a>(atlas: &'a GlyphAtlas, font: &str, word: &str) -> Result<Vec<(char, &'a crate::BinaryImage)>, CorpusError> {
    word.chars()
        .map(|c| {
            atlas
                .glyph(font, c)
                .map(|g| (c, g))
                .ok_or_else(|| CorpusError::UnknownChar { font: font.to_string(), c })
        })
        .collect()
}

/// Rendered width of `word` with no trailing gap.
pub fn word_width(atlas: &GlyphAtlas, font: &str, word: &str, layout: &Layout) -> Result<usize, CorpusError> {
    let glyphs = word_glyphs(atlas, font, word)?;
    let ink: usize = glyphs.iter().map(|(_, g)| g.width()).sum();
    Ok(ink + layout.glyph_gap * glyphs.len().saturating_sub(1))
}

/// Renders lines of text onto a white page. Words are separated by spaces;
/// an empty line starts a new paragraph. Glyph bitmaps are top-aligned in
/// each line cell. The seed drives word-spacing jitter only.
pub fn synth_page(
    atlas: &GlyphAtlas,
    lines: &[String],
    font_id: &str,
    layout: &Layout,
    seed: u64,
) -> Result<(GrayImage, PageEntry), CorpusError> {
    if !atlas.font_ids().contains(&font_id) {
        return Err(CorpusError::UnknownFont(font_id.to_string()));
    }
    let mut rng = rng::rng_from(seed);
    let mut img = GrayImage::new(layout.page_width, layout.page_height, 255);
    let cell = atlas.cell_height(font_id);
    let right_limit = layout.page_width.saturating_sub(layout.margin);
    let bottom_limit = layout.page_height.saturating_sub(layout.margin);
    let mut entry = PageEntry {
        page_id: String::new(),
        font_id: font_id.to_string(),
        width: layout.page_width,
        height: layout.page_height,
        glyphs: Vec::new(),
        words: Vec::new(),
        lines: Vec::new(),
        blocks: Vec::new(),
        images: Default::default(),
    };
    let mut y = layout.margin;
    let mut block: Option<BBox> = None;
    let mut pending_break = false;
    for line in lines {
        if line.trim().is_empty() {
            pending_break = true;
            continue;
        }
        if pending_break && block.is_some() {
            entry.blocks.extend(block.take());
            y += layout.paragraph_gap;
        }
        pending_break = false;
        if y + cell > bottom_limit {
            return Err(CorpusError::PageOverflow(format!("line {:?} does not fit below row {y}", line)));
        }
        let mut x = layout.margin;
        let mut line_box: Option<BBox> = None;
        for (wi, word) in line.split_whitespace().enumerate() {
            if wi > 0 {
                x += layout.word_gap + rng.random_range(0..=layout.word_gap_jitter);
            }
            let glyphs = word_glyphs(atlas, font_id, word)?;
            let width = word_width(atlas, font_id, word, layout)?;
            if x + width > right_limit {
                return Err(CorpusError::PageOverflow(format!("line {:?} is wider than the page", line)));
            }
            let word_index = entry.words.len();
            let mut word_box: Option<BBox> = None;
            for (gi, (c, g)) in glyphs.into_iter().enumerate() {
                if gi > 0 {
                    x += layout.glyph_gap;
                }
                for gy in 0..g.height() {
                    for gx in 0..g.width() {
                        if g.get(gx, gy) {
                            img.set(x + gx, y + gy, 0);
                        }
                    }
                }
                let (bx, by, bw, bh) = g.bounds().expect("atlas bitmaps are non-empty");
                let bbox = BBox::new(x + bx, y + by, bw, bh);
                word_box = Some(word_box.map_or(bbox, |b| b.union(&bbox)));
                entry.glyphs.push(GlyphTruth { bbox, label: c.to_string(), word: word_index });
                x += g.width();
            }
            let wb = word_box.expect("words are non-empty");
            line_box = Some(line_box.map_or(wb, |b| b.union(&wb)));
            entry.words.push(WordTruth { text: word.to_string(), bbox: wb, line: entry.lines.len() });
        }
        if let Some(lb) = line_box {
            entry.lines.push(lb);
            block = Some(block.map_or(lb, |b| b.union(&lb)));
        }
        y += cell + layout.line_gap;
    }
    entry.blocks.extend(block);
    Ok((img, entry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BinaryImage;

    fn small() -> Layout {
        Layout { page_width: 300, page_height: 200, ..Layout::default() }
    }

    #[test]
    fn single_glyph_box_is_tight() {
        let atlas = GlyphAtlas::builtin();
        let (img, entry) = synth_page(&atlas, &["a".to_string()], "base", &small(), 1).unwrap();
        assert_eq!(entry.glyphs.len(), 1);
        let b = entry.glyphs[0].bbox;
        let ink = BinaryImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) == 0);
        let (x, y, w, h) = ink.bounds().unwrap();
        assert_eq!(b, BBox::new(x, y, w, h));
        let g = atlas.glyph("base", 'a').unwrap();
        let (_, gy, gw, gh) = g.bounds().unwrap();
        assert_eq!((b.w, b.h), (gw, gh));
        assert_eq!(b.y, small().margin + gy);
        assert_eq!(ink.count(), g.count());
    }

    #[test]
    fn words_lines_blocks() {
        let atlas = GlyphAtlas::builtin();
        let text: Vec<String> = ["ab cd", "efg", "", "hij"].iter().map(|s| s.to_string()).collect();
        let (_, entry) = synth_page(&atlas, &text, "bold", &Layout::default(), 3).unwrap();
        assert_eq!(entry.words.len(), 4);
        assert_eq!(entry.lines.len(), 3);
        assert_eq!(entry.blocks.len(), 2);
        assert_eq!(entry.glyphs.len(), 10);
        assert_eq!(entry.words[3].line, 2);
        assert!(entry.blocks[0].contains(&entry.lines[1]));
    }

    #[test]
    fn two_lines_of_five() {
        let atlas = GlyphAtlas::builtin();
        let text: Vec<String> = ["abcde", "fghij"].iter().map(|s| s.to_string()).collect();
        let (_, entry) = synth_page(&atlas, &text, "base", &Layout::default(), 0).unwrap();
        assert_eq!(entry.glyphs.len(), 10);
        assert_eq!(entry.lines.len(), 2);
        assert_eq!(entry.glyphs.iter().map(|g| g.label.as_str()).collect::<String>(), "abcdefghij");
    }

    fn assert_boxes_reproduce_atlas(atlas: &GlyphAtlas, img: &GrayImage, entry: &PageEntry) {
        for g in &entry.glyphs {
            let b = g.bbox;
            assert!(b.fits_in(img.width(), img.height()), "{b:?} outside page");
            let bitmap = atlas.glyph(&entry.font_id, g.label.chars().next().unwrap()).unwrap();
            let (x, y, w, h) = bitmap.bounds().unwrap();
            let want = bitmap.crop(x, y, w, h);
            let got = BinaryImage::from_fn(b.w, b.h, |i, j| img.get(b.x + i, b.y + j) == 0);
            assert_eq!(got, want, "glyph '{}' at {b:?}", g.label);
        }
    }

    #[test]
    fn crops_match_atlas_bitmaps() {
        let atlas = GlyphAtlas::builtin();
        let text: Vec<String> = ["pack my box", "with five dozen", "", "liquor jugs"].iter().map(|s| s.to_string()).collect();
        for font in atlas.font_ids() {
            let (img, entry) = synth_page(&atlas, &text, font, &Layout::default(), 4).unwrap();
            assert_boxes_reproduce_atlas(&atlas, &img, &entry);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn random_text_stays_inside(words in proptest::collection::vec("[a-z]{1,8}", 1..20), font in 0usize..4, seed: u64) {
            let atlas = GlyphAtlas::builtin();
            let font = atlas.font_ids()[font].to_string();
            let lines: Vec<String> = words.chunks(4).map(|c| c.join(" ")).collect();
            let (img, entry) = synth_page(&atlas, &lines, &font, &Layout::default(), seed).unwrap();
            proptest::prop_assert_eq!(entry.glyphs.len(), words.iter().map(String::len).sum::<usize>());
            assert_boxes_reproduce_atlas(&atlas, &img, &entry);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let atlas = GlyphAtlas::builtin();
        let text = vec!["the quick brown fox".to_string()];
        let a = synth_page(&atlas, &text, "sheared", &Layout::default(), 9).unwrap();
        let b = synth_page(&atlas, &text, "sheared", &Layout::default(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        let atlas = GlyphAtlas::builtin();
        let long = vec!["abcdefghijklmnopqrstuvwxyz".to_string()];
        assert!(matches!(synth_page(&atlas, &long, "base", &small(), 0), Err(CorpusError::PageOverflow(_))));
        let many: Vec<String> = (0..10).map(|_| "a".to_string()).collect();
        assert!(matches!(synth_page(&atlas, &many, "base", &small(), 0), Err(CorpusError::PageOverflow(_))));
        let bad = vec!["aBc".to_string()];
        assert!(matches!(synth_page(&atlas, &bad, "base", &small(), 0), Err(CorpusError::UnknownChar { c: 'B', .. })));
        assert!(matches!(synth_page(&atlas, &["a".into()], "serif", &small(), 0), Err(CorpusError::UnknownFont(_))));
    }
}
