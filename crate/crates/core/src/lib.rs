//! Character-level word spotting, font features and glyph clustering for
//! degraded document images.
//!
//! The crate is organized as a pipeline:
//!
//! * [`imgcore`]: rasters, PGM/PNG I/O, Gaussian smoothing, Otsu binarization,
//!   isolated-pixel removal and the exact Euclidean distance transform.
//! * [`segmenter`]: blocks, lines and characters from projection profiles,
//!   glyph normalization to a square grid.
//! * [`matchers`]: XOR, distance-weighted (EDM) and projection-profile glyph
//!   dissimilarities, DTW, and word matching over glyph sequences.
//! * [`features`]: box-counting and differential box-counting fractal
//!   dimensions, Haar wavelet energies, 1-NN font classification.
//! * [`clustering`]: k-means, self-organizing maps and leader clustering.
//! * [`spotting`]: query-by-example retrieval and precision/recall evaluation.
//! * [`corpus`]: a seeded synthetic corpus of degraded pages with ground truth.
//! * [`cli`]: the `glyphspot` command line.

pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod features;
pub mod imgcore;
pub mod matchers;
pub mod rng;
pub mod segmenter;
pub mod spotting;

pub use imgcore::{BinaryImage, DistanceField, GrayImage};
