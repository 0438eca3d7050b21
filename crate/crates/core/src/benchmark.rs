//! Benchmark construction: measure every (system, language) sample and fold
//! the ratios into one characteristic value per language.
//!
//! The characteristic value is the LOC-weighted median of the qualifying
//! samples' compression ratios: the smallest ratio `c` such that samples
//! with ratio `<= c` hold at least half of the language's LOC. Samples below
//! `min_sample_bytes` are dropped first (header and model warm-up dominate
//! their ratio), and languages left with fewer than `min_systems` samples go
//! to `insufficient_data` instead of getting a factor.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cleaner::clean_sample;
use crate::compressor::{measure, CompressionMeasurement, CompressorSpec, Measured};
use crate::corpus::{CorpusManifest, ProfileSet};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MIN_SAMPLE_BYTES: u64 = 100 << 10;
pub const DEFAULT_MIN_SYSTEMS: usize = 5;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("measurements mix compressors `{0}` and `{1}`")]
    MixedCompressors(String, String),
    #[error("benchmark schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u64, expected: u32 },
    #[error("benchmark file has no schema_version field")]
    MissingVersion,
    #[error("malformed benchmark file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_sample_bytes: u64,
    pub min_systems: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_sample_bytes: DEFAULT_MIN_SAMPLE_BYTES,
            min_systems: DEFAULT_MIN_SYSTEMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcisenessFactor {
    pub language_id: String,
    pub cr_characteristic: f64,
    pub sample_count: usize,
    pub total_loc: u64,
    pub cr_p25: f64,
    pub cr_p75: f64,
    pub min_sample_bytes: u64,
    pub min_systems: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsufficientLanguage {
    pub language_id: String,
    /// Samples that passed the size threshold.
    pub qualifying_samples: usize,
    /// Samples dropped for being smaller than `min_sample_bytes`.
    pub small_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub system_id: String,
    pub language_id: String,
    pub cr: f64,
    pub loc: u64,
    pub bytes: u64,
    pub compressed_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkDb {
    pub schema_version: u32,
    /// Creation time (RFC 3339); absent in reproducible output.
    pub created_at: Option<String>,
    pub compressor_name: String,
    pub thresholds: Thresholds,
    pub factors: BTreeMap<String, ConcisenessFactor>,
    pub insufficient_data: Vec<InsufficientLanguage>,
    pub provenance: Vec<ProvenanceEntry>,
}

impl BenchmarkDb {
    pub fn factor(&self, language_id: &str) -> Option<&ConcisenessFactor> {
        self.factors.get(language_id)
    }

    /// Unweighted median of the characteristic ratios (mean of the middle pair when even).
    pub fn median_cr(&self) -> Option<f64> {
        let mut crs: Vec<f64> = self.factors.values().map(|f| f.cr_characteristic).collect();
        if crs.is_empty() {
            return None;
        }
        crs.sort_by(f64::total_cmp);
        let mid = crs.len() / 2;
        Some(if crs.len() % 2 == 1 {
            crs[mid]
        } else {
            (crs[mid - 1] + crs[mid]) / 2.0
        })
    }

    /// Back to measurements, e.g. to re-aggregate under other thresholds.
    pub fn provenance_measurements(&self) -> Vec<CompressionMeasurement> {
        self.provenance
            .iter()
            .map(|p| CompressionMeasurement {
                system_id: p.system_id.clone(),
                language_id: p.language_id.clone(),
                original_bytes: p.bytes,
                compressed_bytes: p.compressed_bytes,
                compression_ratio: p.cr,
                loc: p.loc,
                compressor_name: self.compressor_name.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub system_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeasurements {
    pub measurements: Vec<CompressionMeasurement>,
    pub log: Vec<LogEntry>,
}

enum SampleOutcome {
    Done(CompressionMeasurement),
    Note(LogEntry),
}

/// Cleans and compresses every (system, language) pair of `manifest`.
///
/// Per-sample failures become log entries; the run never aborts.
pub fn measure_corpus(manifest: &CorpusManifest, profiles: &ProfileSet, spec: &CompressorSpec) -> CorpusMeasurements {
    let mut jobs = Vec::new();
    let mut log = Vec::new();
    for system in &manifest.systems {
        if system.files.is_empty() {
            log.push(LogEntry {
                system_id: system.system_id.clone(),
                language_id: None,
                message: "no recognized source files".into(),
            });
        }
        for language in system.files.keys() {
            jobs.push((system, language.as_str()));
        }
    }

    let outcomes: Vec<SampleOutcome> = jobs
        .par_iter()
        .map(|&(system, language)| {
            let note = |message: String| {
                SampleOutcome::Note(LogEntry {
                    system_id: system.system_id.clone(),
                    language_id: Some(language.to_string()),
                    message,
                })
            };
            let Some(profile) = profiles.get(language) else {
                return note(format!("no profile for language `{language}`"));
            };
            let sample = match clean_sample(&system.system_id, &system.absolute_files(language), profile) {
                Ok(s) => s,
                Err(e) => return note(e.to_string()),
            };
            match measure(&sample, spec) {
                Ok(Measured::Ratio(m)) => SampleOutcome::Done(m),
                Ok(Measured::SkippedEmpty) => note("empty sample after cleaning".into()),
                Err(e) => note(format!("measurement failed: {e}")),
            }
        })
        .collect();

    let mut measurements = Vec::new();
    for outcome in outcomes {
        match outcome {
            SampleOutcome::Done(m) => measurements.push(m),
            SampleOutcome::Note(entry) => log.push(entry),
        }
    }
    measurements.sort_by(|a, b| {
        (a.system_id.as_str(), a.language_id.as_str()).cmp(&(b.system_id.as_str(), b.language_id.as_str()))
    });
    log.sort_by(|a, b| {
        (a.system_id.as_str(), a.language_id.as_deref()).cmp(&(b.system_id.as_str(), b.language_id.as_deref()))
    });
    CorpusMeasurements { measurements, log }
}

/// LOC-weighted median of `(cr, loc)` pairs: the smallest ratio whose
/// cumulative LOC reaches half of the total. `None` when empty or weightless.
pub fn weighted_median(samples: &[(f64, u64)]) -> Option<f64> {
    let total: u128 = samples.iter().map(|&(_, w)| u128::from(w)).sum();
    if total == 0 {
        return None;
    }
    let mut sorted: Vec<(f64, u64)> = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cumulative: u128 = 0;
    for (cr, w) in sorted {
        cumulative += u128::from(w);
        if 2 * cumulative >= total {
            return Some(cr);
        }
    }
    unreachable!("cumulative weight reaches the total")
}

/// Linear-interpolated quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Folds measurements into per-language conciseness factors.
pub fn aggregate(
    measurements: &[CompressionMeasurement],
    thresholds: Thresholds,
) -> Result<BenchmarkDb, BenchmarkError> {
    let compressor_name = match measurements.first() {
        Some(first) => {
            if let Some(other) = measurements.iter().find(|m| m.compressor_name != first.compressor_name) {
                return Err(BenchmarkError::MixedCompressors(
                    first.compressor_name.clone(),
                    other.compressor_name.clone(),
                ));
            }
            first.compressor_name.clone()
        }
        None => String::new(),
    };

    let mut by_language: BTreeMap<&str, Vec<&CompressionMeasurement>> = BTreeMap::new();
    for m in measurements {
        by_language.entry(&m.language_id).or_default().push(m);
    }

    let mut factors = BTreeMap::new();
    let mut insufficient = Vec::new();
    let mut provenance = Vec::new();
    for (language, samples) in by_language {
        let (kept, small): (Vec<_>, Vec<_>) = samples
            .into_iter()
            .partition(|m| m.original_bytes >= thresholds.min_sample_bytes && m.original_bytes > 0);
        if kept.len() < thresholds.min_systems || kept.is_empty() {
            insufficient.push(InsufficientLanguage {
                language_id: language.to_string(),
                qualifying_samples: kept.len(),
                small_samples: small.len(),
            });
            continue;
        }
        let pairs: Vec<(f64, u64)> = kept.iter().map(|m| (m.compression_ratio, m.loc)).collect();
        let mut crs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        crs.sort_by(f64::total_cmp);
        let total_loc: u64 = kept.iter().map(|m| m.loc).sum();
        // All-zero LOC cannot occur for non-empty samples; fall back to the plain median anyway.
        let cr = weighted_median(&pairs).unwrap_or_else(|| quantile(&crs, 0.5));
        factors.insert(
            language.to_string(),
            ConcisenessFactor {
                language_id: language.to_string(),
                cr_characteristic: cr,
                sample_count: kept.len(),
                total_loc,
                cr_p25: quantile(&crs, 0.25),
                cr_p75: quantile(&crs, 0.75),
                min_sample_bytes: thresholds.min_sample_bytes,
                min_systems: thresholds.min_systems,
            },
        );
        provenance.extend(kept.iter().map(|m| ProvenanceEntry {
            system_id: m.system_id.clone(),
            language_id: m.language_id.clone(),
            cr: m.compression_ratio,
            loc: m.loc,
            bytes: m.original_bytes,
            compressed_bytes: m.compressed_bytes,
        }));
    }
    provenance.sort_by(|a, b| {
        (a.language_id.as_str(), a.system_id.as_str(), a.cr.to_bits()).cmp(&(
            b.language_id.as_str(),
            b.system_id.as_str(),
            b.cr.to_bits(),
        ))
    });

    Ok(BenchmarkDb {
        schema_version: SCHEMA_VERSION,
        created_at: None,
        compressor_name,
        thresholds,
        factors,
        insufficient_data: insufficient,
        provenance,
    })
}

pub fn save_benchmark(db: &BenchmarkDb, mut sink: impl Write) -> Result<(), BenchmarkError> {
    serde_json::to_writer_pretty(&mut sink, db)?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load_benchmark(mut source: impl Read) -> Result<BenchmarkDb, BenchmarkError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let version = value
        .get("schema_version")
        .ok_or(BenchmarkError::MissingVersion)?
        .as_u64()
        .ok_or(BenchmarkError::MissingVersion)?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(BenchmarkError::SchemaVersion {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}

/// Factor table as CSV with columns `language,cr,samples,loc`.
pub fn write_factors_csv(db: &BenchmarkDb, sink: impl Write) -> Result<(), BenchmarkError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["language", "cr", "samples", "loc"])?;
    for f in db.factors.values() {
        w.write_record([
            f.language_id.clone(),
            f.cr_characteristic.to_string(),
            f.sample_count.to_string(),
            f.total_loc.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
