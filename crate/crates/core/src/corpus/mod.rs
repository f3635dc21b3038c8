//! Synthetic document corpus: glyph atlas, page rendering, degradation and
//! the default word-spotting benchmark.

mod atlas;
mod build;
mod degrade;
mod fixtures;
mod page;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::imgcore::ImageError;

pub use atlas::{dilate, load_atlas, shear_horizontal, shrink_horizontal, GlyphAtlas, BUILTIN_SCALE, FONT_BASE, FONT_BOLD, FONT_CONDENSED, FONT_SHEARED};
pub use build::{build_corpus, build_default_corpus, load_manifest, CorpusConfig, CorpusManifest, Occurrence, QueryEntry, Tier, SCHEMA_VERSION};
pub use degrade::{degrade, Degradation};
pub use fixtures::{render_fractal_fixture, FractalFixture};
pub use page::{synth_page, word_width, GlyphTruth, Layout, PageEntry, WordTruth};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("atlas: {0}")]
    Atlas(String),
    #[error("font '{font}' has no glyph for {c:?}")]
    UnknownChar { font: String, c: char },
    #[error("unknown font '{0}'")]
    UnknownFont(String),
    #[error("text does not fit the page: {0}")]
    PageOverflow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}
