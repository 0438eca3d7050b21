//! Programming-language conciseness from source-code compression.
//!
//! The pipeline: [`corpus`] finds source files and groups them per system and
//! language, [`cleaner`] drops blank and comment-only lines, [`compressor`]
//! turns each cleaned sample into a compression ratio, [`benchmark`] folds
//! ratios over many systems into a characteristic ratio per language, and
//! [`metrics`] divides line counts by those ratios to compare code volume
//! across languages. [`validation`] checks a benchmark's ranking against
//! external rankings.
//!
//! Runnable walkthroughs live in `examples/`; the `conciseness` binary wires
//! the same stages together behind file-based subcommands.

pub mod benchmark;
pub mod cleaner;
pub mod cli;
pub mod compressor;
pub mod corpus;
pub mod metrics;
pub mod validation;

pub use benchmark::{aggregate, measure_corpus, BenchmarkDb, ConcisenessFactor, Thresholds};
pub use cleaner::{classify_lines, clean_sample, CleanedSample, LineClass};
pub use compressor::{compress, measure, CompressionMeasurement, CompressorSpec};
pub use corpus::{load_language_profiles, scan_corpus, CorpusManifest, LanguageProfile, ProfileSet, ScanOptions};
