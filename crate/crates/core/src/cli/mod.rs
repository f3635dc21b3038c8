//! The `glyphspot` command line.
//!
//! Every subcommand writes into its `--out` directory and leaves a
//! `run.json` there recording the effective arguments, resolved parameters,
//! seed, tool version and SHA-256 digests of its inputs. Running
//! `glyphspot` with the recorded `argv` from the same working directory
//! reproduces the outputs byte for byte.
//!
//! Defaults may also come from a `--config` file of `key = value` lines,
//! where keys are long flag names without the dashes. Flags given on the
//! command line win.

mod commands;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::clustering::ClusterError;
use crate::corpus::CorpusError;
use crate::features::{Extractor, FeatureError};
use crate::imgcore::ImageError;
use crate::matchers::{MatchError, Method};
use crate::segmenter::SegmentError;
use crate::spotting::{FontImage, FontspotParams, SegmentParams, SpotError, TauPolicy};

pub const DEFAULT_SEED: u64 = 42;
pub const THREADS_ENV: &str = "GLYPHSPOT_THREADS";
pub const RUN_METADATA: &str = "run.json";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "glyphspot", version, about = "Character-level word spotting, font features and glyph clustering")]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for long flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the seeded synthetic corpus.
    Synth(SynthArgs),
    /// Smooth and binarize page images.
    Preprocess(PreprocessArgs),
    /// Segment pages into blocks, lines, words and normalized glyphs.
    Segment(SegmentArgs),
    /// Compute fractal or wavelet features.
    Features(FeaturesArgs),
    /// Rank a glyph set against query glyphs.
    Spot(SpotArgs),
    /// 1-NN font recognition on a corpus.
    Fontspot(FontspotArgs),
    /// Group glyphs with k-means, a self-organizing map or leader clustering.
    Cluster(ClusterArgs),
    /// Compare matching methods on a corpus.
    Eval(EvalArgs),
    /// Run every stage end to end, persisting intermediates.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Single characters; relevant items share the query's letter in any font.
    Char,
    /// Whole words; relevant items are the planted occurrences.
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmeans,
    Som,
    Leader,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Spot,
    Fontspot,
    Cluster,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SegmentOpts {
    /// Gaussian sigma before Otsu binarization.
    #[arg(long, default_value_t = SegmentParams::default().sigma)]
    pub sigma: f64,
    /// Horizontal smearing length; estimated per page when omitted.
    #[arg(long, requires = "smear_v")]
    pub smear_h: Option<usize>,
    /// Vertical smearing length; estimated per page when omitted.
    #[arg(long, requires = "smear_h")]
    pub smear_v: Option<usize>,
    /// Blank rows that separate lines.
    #[arg(long, default_value_t = SegmentParams::default().min_line_gap)]
    pub min_line_gap: usize,
    /// Blank columns that separate words.
    #[arg(long, default_value_t = SegmentParams::default().word_gap)]
    pub word_gap: usize,
    /// Blank columns that separate characters.
    #[arg(long, default_value_t = SegmentParams::default().min_char_gap)]
    pub min_gap: usize,
    /// Side of normalized glyph grids.
    #[arg(long, default_value_t = SegmentParams::default().side)]
    pub side: usize,
}

impl SegmentOpts {
    pub fn params(&self) -> SegmentParams {
        SegmentParams {
            sigma: self.sigma,
            smear: self.smear_h.zip(self.smear_v),
            min_line_gap: self.min_line_gap,
            word_gap: self.word_gap,
            min_char_gap: self.min_gap,
            side: self.side,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FontOpts {
    /// Side of square texture tiles.
    #[arg(long, default_value_t = FontspotParams::default().window)]
    pub window: usize,
    /// Rows between consecutive tiles.
    #[arg(long, default_value_t = FontspotParams::default().stride)]
    pub stride: usize,
    /// Fractal signature grid (k x k cells).
    #[arg(long, default_value_t = FontspotParams::default().k)]
    pub fractal_k: usize,
    /// Wavelet decomposition levels.
    #[arg(long, default_value_t = FontspotParams::default().levels)]
    pub levels: usize,
    /// Gaussian sigma applied before the smoothed and binary renditions.
    #[arg(long, default_value_t = FontspotParams::default().sigma)]
    pub font_sigma: f64,
    /// Page rendition features are computed on: raw, smoothed or binary.
    #[arg(long, default_value = "binary")]
    pub font_image: FontImage,
    /// Blank columns kept between characters in texture tiles.
    #[arg(long, default_value_t = FontspotParams::default().gap)]
    pub tile_gap: usize,
    /// Minimum ink fraction of a kept tile.
    #[arg(long, default_value_t = FontspotParams::default().min_ink)]
    pub min_ink: f64,
}

impl FontOpts {
    pub fn params(&self) -> FontspotParams {
        FontspotParams {
            window: self.window,
            k: self.fractal_k,
            levels: self.levels,
            sigma: self.font_sigma,
            image: self.font_image,
            stride: self.stride,
            gap: self.tile_gap,
            min_ink: self.min_ink,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterOpts {
    #[arg(long, value_enum, default_value_t = Algorithm::Leader)]
    pub algorithm: Algorithm,
    /// Number of k-means classes.
    #[arg(long, default_value_t = 26)]
    pub k: usize,
    /// SOM rows.
    #[arg(long, default_value_t = 6)]
    pub rows: usize,
    /// SOM columns.
    #[arg(long, default_value_t = 6)]
    pub cols: usize,
    /// SOM training epochs.
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// k-means iteration cap.
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Zones per side of the ink-density vectors fed to k-means and the SOM.
    #[arg(long, default_value_t = 8)]
    pub zones: usize,
    /// Leader clustering threshold.
    #[arg(long, default_value_t = 0.08)]
    pub cluster_tau: f64,
    /// Dissimilarity used by leader clustering.
    #[arg(long, default_value = "xor")]
    pub cluster_method: Method,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory of per-font `<char>.pgm` bitmaps; the built-in fonts otherwise.
    #[arg(long)]
    pub atlas: Option<PathBuf>,
    #[arg(long, default_value_t = 7000)]
    pub target_glyphs: usize,
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    #[arg(long, default_value_t = 50)]
    pub extra_occurrences: usize,
    #[arg(long, default_value_t = 800)]
    pub vocabulary: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PreprocessArgs {
    /// Page images (PGM or PNG).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SegmentParams::default().sigma)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SegmentArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Inputs are already binary (ink below 128); skip preprocessing.
    #[arg(long)]
    pub binary: bool,
    #[command(flatten)]
    pub segment: SegmentOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["glyphs", "input"])))]
pub struct FeaturesArgs {
    /// Glyph set directory; one record per glyph.
    #[arg(long)]
    pub glyphs: Option<PathBuf>,
    /// Page images; one record per texture tile.
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "fractal_sig,wavelet_energy")]
    pub extractors: Vec<Extractor>,
    #[command(flatten)]
    pub font: FontOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(clap::ArgGroup::new("query_source").required(true).args(["query", "queries"])))]
pub struct SpotArgs {
    /// Glyph set to search.
    #[arg(long)]
    pub glyphs: PathBuf,
    /// Ids of query glyphs taken from the searched set.
    #[arg(long)]
    pub query: Vec<String>,
    /// A separate glyph set of queries.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value = "edm")]
    pub method: Method,
    /// Keep matches with dissimilarity <= tau.
    #[arg(long, conflicts_with = "top_k")]
    pub tau: Option<f64>,
    /// Keep the k best matches; 10 when neither tau nor top-k is given.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FontspotArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "clean")]
    pub train_tier: String,
    #[arg(long, default_value = "heavy")]
    pub test_tier: String,
    #[arg(long, value_delimiter = ',', default_value = "fractal_sig,wavelet_energy")]
    pub extractors: Vec<Extractor>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub font: FontOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub glyphs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub cluster: ClusterOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "mild")]
    pub tier: String,
    #[arg(long, value_enum, default_value_t = Unit::Char)]
    pub unit: Unit,
    #[arg(long, value_delimiter = ',', default_value = "xor,edm,vproj")]
    pub methods: Vec<Method>,
    /// `best-f1` or `fixed:<tau>`.
    #[arg(long, default_value = "best-f1")]
    pub tau_policy: TauPolicy,
    /// Font whose glyphs serve as character queries; `all` for every font.
    #[arg(long, default_value = "base")]
    pub query_font: String,
    #[arg(long, default_value = "eval")]
    pub out: PathBuf,
    #[command(flatten)]
    pub segment: SegmentOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    #[arg(long, default_value = "corpus")]
    pub corpus: PathBuf,
    /// Generate the corpus first when it has no manifest.
    #[arg(long)]
    pub synth: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "pipeline-out")]
    pub out: PathBuf,
    #[arg(long, default_value = "clean")]
    pub tier: String,
    #[arg(long, value_delimiter = ',', default_value = "spot,fontspot,cluster")]
    pub stages: Vec<Stage>,
    #[arg(long, value_enum, default_value_t = Unit::Word)]
    pub unit: Unit,
    #[arg(long, value_delimiter = ',', default_value = "xor,edm,vproj")]
    pub methods: Vec<Method>,
    #[arg(long, default_value = "best-f1")]
    pub tau_policy: TauPolicy,
    #[arg(long, default_value = "base")]
    pub query_font: String,
    /// Tier font models are trained on; the test tier is `--tier`.
    #[arg(long, default_value = "clean")]
    pub train_tier: String,
    #[arg(long, value_delimiter = ',', default_value = "fractal_sig,wavelet_energy")]
    pub extractors: Vec<Extractor>,
    #[command(flatten)]
    pub segment: SegmentOpts,
    #[command(flatten)]
    pub font: FontOpts,
    #[command(flatten)]
    pub cluster: ClusterOpts,
}

/// A failure with the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
        }
    }

    /// Prefixes the message with the pipeline stage that failed.
    pub fn in_stage(self, stage: &str) -> CliError {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("stage {stage}: {m}")),
            CliError::Data(m) => CliError::Data(format!("stage {stage}: {m}")),
            CliError::Io(m) => CliError::Io(format!("stage {stage}: {m}")),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::NotFound(_) | ImageError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Image(e) => e.into(),
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SegmentError> for CliError {
    fn from(e: SegmentError) -> Self {
        match e {
            SegmentError::Image(e) => e.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SpotError> for CliError {
    fn from(e: SpotError) -> Self {
        match e {
            SpotError::Image(e) => e.into(),
            SpotError::Corpus(e) => e.into(),
            SpotError::Segment(e) => e.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(FeatureError, ClusterError, MatchError);

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I: IntoIterator<Item = OsString>>(argv: I) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let argv: Vec<OsString> = argv.into_iter().collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match thread_count() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_IO;
        }
    };
    // Recorded without the program name so the list can be replayed as is.
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match pool.install(|| commands::execute(&cli.command, &recorded)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Worker threads from `GLYPHSPOT_THREADS`; 0 or unset lets rayon decide.
fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")))
        }
        _ => Ok(0),
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Splices config-file entries in after the subcommand name, skipping keys
/// already present on the command line, and drops `--config` itself. `true` becomes a bare switch and
/// `false` is dropped.
fn apply_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            config = args.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if sub.is_none() && !a.starts_with('-') {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, sub) else { return Ok(argv) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let given = |key: &str| {
        let flag = format!("--{key}");
        args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut injected = Vec::new();
    for (key, value) in parse_config(&text)? {
        if given(&key) {
            continue;
        }
        match value.as_str() {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value);
            }
        }
    }
    // The config file is folded in, so the recorded argv replays without it.
    let mut merged: Vec<OsString> = Vec::with_capacity(argv.len() + injected.len());
    let mut skip_next = false;
    for (i, a) in argv.into_iter().enumerate() {
        if skip_next {
            skip_next = false;
            continue;
        }
        if a == "--config" {
            skip_next = true;
            continue;
        }
        if a.to_string_lossy().starts_with("--config=") {
            continue;
        }
        merged.push(a);
        if i == sub {
            merged.extend(injected.iter().map(OsString::from));
        }
    }
    Ok(merged)
}

/// SHA-256 of a file, or of a directory as the digest of its sorted
/// `relative-path NUL file-digest` listing.
pub fn digest_path(path: &Path) -> Result<String, CliError> {
    use sha2::{Digest, Sha256};
    let meta = fs::metadata(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if meta.is_file() {
        let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return Ok(hex::encode(Sha256::digest(&bytes)));
    }
    let mut files = Vec::new();
    collect_files(path, path, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for rel in files {
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(digest_path(&path.join(&rel))?.as_bytes());
        h.update([b'\n']);
    }
    Ok(hex::encode(h.finalize()))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry?;
        let p = entry.path();
        if entry.file_type()?.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("walked below root");
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}
