use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{degrade, synth_page, word_width, CorpusError, Degradation, GlyphAtlas, GlyphTruth, Layout, PageEntry};
use crate::imgcore::{save_image, ImageFormat};
use crate::rng::{self, Rng};

pub const SCHEMA_VERSION: u32 = 1;

// Approximate English letter frequencies, per mille.
const LETTER_WEIGHTS: [u32; 26] = [82, 15, 28, 43, 127, 22, 20, 61, 70, 2, 8, 40, 24, 67, 75, 19, 1, 60, 63, 91, 28, 10, 24, 2, 20, 1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier {
    pub name: String,
    #[serde(flatten)]
    pub degradation: Degradation,
}

impl Tier {
    pub fn new(name: &str, noise_sigma: f64, downsample_factor: usize, speckle_rate: f64) -> Tier {
        Tier { name: name.to_string(), degradation: Degradation { noise_sigma, downsample_factor, speckle_rate } }
    }

    /// clean, mild (noise 5) and heavy (noise 15, 2x downsample, 0.2% speckle).
    pub fn defaults() -> Vec<Tier> {
        vec![Tier::new("clean", 0.0, 1, 0.0), Tier::new("mild", 5.0, 1, 0.0), Tier::new("heavy", 15.0, 2, 0.002)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    /// Glyph total to reach; the result overshoots by less than one word.
    pub target_glyphs: usize,
    pub queries: usize,
    /// Occurrences planted beyond the first one per query.
    pub extra_occurrences: usize,
    pub vocabulary: usize,
    pub layout: Layout,
    pub tiers: Vec<Tier>,
}

impl CorpusConfig {
    pub fn new(seed: u64) -> CorpusConfig {
        CorpusConfig {
            seed,
            target_glyphs: 7000,
            queries: 100,
            extra_occurrences: 50,
            vocabulary: 800,
            layout: Layout::default(),
            tiers: Tier::defaults(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occurrence {
    pub page_id: String,
    /// Index into the page's `words`.
    pub word: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEntry {
    pub query_id: String,
    pub text: String,
    pub font_id: String,
    pub width: usize,
    pub height: usize,
    pub glyphs: Vec<GlyphTruth>,
    pub images: BTreeMap<String, String>,
    pub occurrences: Vec<Occurrence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub layout: Layout,
    pub tiers: Vec<Tier>,
    pub pages: Vec<PageEntry>,
    pub queries: Vec<QueryEntry>,
}

impl CorpusManifest {
    pub fn glyph_count(&self) -> usize {
        self.pages.iter().map(|p| p.glyphs.len()).sum()
    }

    pub fn occurrence_count(&self) -> usize {
        self.queries.iter().map(|q| q.occurrences.len()).sum()
    }

    pub fn tier(&self, name: &str) -> Option<&Tier> {
        self.tiers.iter().find(|t| t.name == name)
    }

    pub fn page(&self, page_id: &str) -> Option<&PageEntry> {
        self.pages.iter().find(|p| p.page_id == page_id)
    }
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let m: CorpusManifest = serde_json::from_str(&text).map_err(|e| CorpusError::Manifest(format!("{}: {e}", path.display())))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(CorpusError::Manifest(format!("unsupported schema_version {}", m.schema_version)));
    }
    Ok(m)
}

fn random_word(rng: &mut Rng, letters: &WeightedIndex<u32>, len: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.random_range(len);
    (0..n).map(|_| (b'a' + letters.sample(rng) as u8) as char).collect()
}

/// Words tagged with the query they instantiate, if any.
type Stream = Vec<(String, Option<usize>)>;

struct PagePlan {
    lines: Vec<String>,
    tags: Vec<Option<usize>>,
}

fn paginate(atlas: &GlyphAtlas, font: &str, stream: &Stream, layout: &Layout, rng: &mut Rng) -> Result<Vec<PagePlan>, CorpusError> {
    let max_width = layout.page_width - 2 * layout.margin;
    let gap = layout.word_gap + layout.word_gap_jitter;
    let mut lines: Vec<(Vec<usize>, bool)> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut width = 0;
    let mut para_left = rng.random_range(4..=8);
    for (i, (word, _)) in stream.iter().enumerate() {
        let w = word_width(atlas, font, word, layout)?;
        let needed = if current.is_empty() { w } else { width + gap + w };
        if needed > max_width && !current.is_empty() {
            para_left -= 1;
            let ends_paragraph = para_left == 0;
            if ends_paragraph {
                para_left = rng.random_range(4..=8);
            }
            lines.push((std::mem::take(&mut current), ends_paragraph));
            width = w;
        } else {
            width = needed;
        }
        current.push(i);
    }
    if !current.is_empty() {
        lines.push((current, true));
    }

    let cell = atlas.cell_height(font);
    let bottom = layout.page_height - layout.margin;
    let mut pages = Vec::new();
    let mut plan = PagePlan { lines: Vec::new(), tags: Vec::new() };
    let mut y = layout.margin;
    let mut after_paragraph = false;
    for (words, ends_paragraph) in lines {
        let extra = if after_paragraph && !plan.lines.is_empty() { layout.paragraph_gap } else { 0 };
        if y + extra + cell > bottom {
            pages.push(std::mem::replace(&mut plan, PagePlan { lines: Vec::new(), tags: Vec::new() }));
            y = layout.margin;
        } else if extra > 0 {
            plan.lines.push(String::new());
            y += extra;
        }
        plan.lines.push(words.iter().map(|&i| stream[i].0.as_str()).collect::<Vec<_>>().join(" "));
        plan.tags.extend(words.iter().map(|&i| stream[i].1));
        y += cell + layout.line_gap;
        after_paragraph = ends_paragraph;
    }
    if !plan.lines.is_empty() {
        pages.push(plan);
    }
    Ok(pages)
}

/// Generates a corpus under `out`: `pages/<page>_<tier>.pgm`,
/// `queries/<query>_<tier>.pgm` and `manifest.json`.
pub fn build_corpus(atlas: &GlyphAtlas, cfg: &CorpusConfig, out: &Path) -> Result<CorpusManifest, CorpusError> {
    let fonts: Vec<String> = atlas.font_ids().into_iter().map(str::to_string).collect();
    if cfg.queries == 0 || cfg.target_glyphs == 0 {
        return Err(CorpusError::InvalidParameter("queries and target_glyphs must be positive".into()));
    }
    if atlas.alphabet().len() != 26 || atlas.alphabet().iter().any(|c| !c.is_ascii_lowercase()) {
        return Err(CorpusError::Atlas("the benchmark generator needs the 26 lowercase letters".into()));
    }
    let letters = WeightedIndex::new(LETTER_WEIGHTS).expect("weights are positive");
    let mut rng = rng::stream(cfg.seed, "corpus-text", 0);

    let mut query_words: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    while query_words.len() < cfg.queries {
        let w = random_word(&mut rng, &letters, 4..=7);
        if seen.insert(w.clone()) {
            query_words.push(w);
        }
    }
    let mut vocab: Vec<String> = Vec::new();
    while vocab.len() < cfg.vocabulary {
        let w = random_word(&mut rng, &letters, 2..=9);
        if seen.insert(w.clone()) {
            vocab.push(w);
        }
    }
    let query_font = |q: usize| fonts[q % fonts.len()].clone();
    let mut counts = vec![1usize; cfg.queries];
    for _ in 0..cfg.extra_occurrences {
        counts[rng.random_range(0..cfg.queries)] += 1;
    }

    let mut pages = Vec::new();
    let mut page_tags = Vec::new();
    for (fi, font) in fonts.iter().enumerate() {
        let budget = cfg.target_glyphs / fonts.len() + usize::from(fi < cfg.target_glyphs % fonts.len());
        let planted: Vec<usize> = (0..cfg.queries).filter(|&q| query_font(q) == *font).flat_map(|q| std::iter::repeat_n(q, counts[q])).collect();
        let mut total: usize = planted.iter().map(|&q| query_words[q].len()).sum();
        let mut stream: Stream = Vec::new();
        while total < budget {
            let w = vocab.choose(&mut rng).expect("vocabulary is non-empty").clone();
            total += w.len();
            stream.push((w, None));
        }
        for q in planted {
            let pos = rng.random_range(0..=stream.len());
            stream.insert(pos, (query_words[q].clone(), Some(q)));
        }
        for (pi, plan) in paginate(atlas, font, &stream, &cfg.layout, &mut rng)?.into_iter().enumerate() {
            let page_seed = rng::derive_seed(cfg.seed, "page-layout", pages.len() as u64);
            let (img, mut entry) = synth_page(atlas, &plan.lines, font, &cfg.layout, page_seed)?;
            entry.page_id = format!("{font}-{pi:02}");
            pages.push((img, entry));
            page_tags.push(plan.tags);
        }
    }

    let pages_dir = out.join("pages");
    let queries_dir = out.join("queries");
    for d in [&pages_dir, &queries_dir] {
        fs::create_dir_all(d).map_err(|e| CorpusError::io(d, e))?;
    }
    let mut occurrences: Vec<Vec<super::build::Occurrence>> = vec![Vec::new(); cfg.queries];
    let mut entries = Vec::new();
    for (index, ((img, mut entry), tags)) in pages.into_iter().zip(page_tags).enumerate() {
        for (wi, tag) in tags.iter().enumerate() {
            if let Some(q) = tag {
                occurrences[*q].push(Occurrence { page_id: entry.page_id.clone(), word: wi });
            }
        }
        for tier in &cfg.tiers {
            let seed = rng::derive_seed(cfg.seed, &format!("page-degrade:{}", tier.name), index as u64);
            let rel = format!("pages/{}_{}.pgm", entry.page_id, tier.name);
            save_image(&degrade(&img, &tier.degradation, seed)?, out.join(&rel), ImageFormat::Pgm)?;
            entry.images.insert(tier.name.clone(), rel);
        }
        entries.push(entry);
    }

    let mut queries = Vec::new();
    for (q, text) in query_words.iter().enumerate() {
        let font = query_font(q);
        let margin = 16;
        let layout = Layout {
            page_width: word_width(atlas, &font, text, &cfg.layout)? + 2 * margin,
            page_height: atlas.cell_height(&font) + 2 * margin,
            margin,
            ..cfg.layout
        };
        let (img, entry) = synth_page(atlas, std::slice::from_ref(text), &font, &layout, 0)?;
        let query_id = format!("q{q:03}");
        let mut images = BTreeMap::new();
        for tier in &cfg.tiers {
            let seed = rng::derive_seed(cfg.seed, &format!("query-degrade:{}", tier.name), q as u64);
            let rel = format!("queries/{query_id}_{}.pgm", tier.name);
            save_image(&degrade(&img, &tier.degradation, seed)?, out.join(&rel), ImageFormat::Pgm)?;
            images.insert(tier.name.clone(), rel);
        }
        queries.push(QueryEntry {
            query_id,
            text: text.clone(),
            font_id: font,
            width: layout.page_width,
            height: layout.page_height,
            glyphs: entry.glyphs,
            images,
            occurrences: std::mem::take(&mut occurrences[q]),
        });
    }

    let manifest = CorpusManifest { schema_version: SCHEMA_VERSION, seed: cfg.seed, layout: cfg.layout, tiers: cfg.tiers.clone(), pages: entries, queries };
    let path = out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    fs::write(&path, json).map_err(|e| CorpusError::io(&path, e))?;
    Ok(manifest)
}

/// The built-in atlas with [`CorpusConfig::new`].
pub fn build_default_corpus(out: &Path, seed: u64) -> Result<CorpusManifest, CorpusError> {
    build_corpus(&GlyphAtlas::builtin(), &CorpusConfig::new(seed), out)
}
