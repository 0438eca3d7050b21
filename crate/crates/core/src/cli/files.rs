//! On-disk formats exchanged between subcommands, and atomic writes.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmark::LogEntry;
use crate::compressor::{CompressionMeasurement, CompressorSpec};
use crate::corpus::SkippedFile;

pub const MEASUREMENTS_SCHEMA_VERSION: u32 = 1;

/// Output of `measure` in JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementsFile {
    pub schema_version: u32,
    pub created_at: Option<String>,
    pub compressor: CompressorSpec,
    pub measurements: Vec<CompressionMeasurement>,
    #[serde(default)]
    pub log: Vec<LogEntry>,
    #[serde(default)]
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementRow {
    system: String,
    language: String,
    original_bytes: u64,
    compressed_bytes: u64,
    cr: f64,
    loc: u64,
    compressor: String,
}

/// Writes `system,language,original_bytes,compressed_bytes,cr,loc,compressor`.
pub fn write_measurements_csv(measurements: &[CompressionMeasurement], sink: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for m in measurements {
        w.serialize(MeasurementRow {
            system: m.system_id.clone(),
            language: m.language_id.clone(),
            original_bytes: m.original_bytes,
            compressed_bytes: m.compressed_bytes,
            cr: m.compression_ratio,
            loc: m.loc,
            compressor: m.compressor_name.clone(),
        })?;
    }
    if measurements.is_empty() {
        w.write_record([
            "system",
            "language",
            "original_bytes",
            "compressed_bytes",
            "cr",
            "loc",
            "compressor",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measurements_csv(source: impl Read) -> csv::Result<Vec<CompressionMeasurement>> {
    let mut reader = csv::Reader::from_reader(source);
    reader
        .deserialize::<MeasurementRow>()
        .map(|row| {
            row.map(|r| CompressionMeasurement {
                system_id: r.system,
                language_id: r.language,
                original_bytes: r.original_bytes,
                compressed_bytes: r.compressed_bytes,
                compression_ratio: r.cr,
                loc: r.loc,
                compressor_name: r.compressor,
            })
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum MeasurementsError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed measurements file {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("measurements file {path} has schema version {found}, expected {MEASUREMENTS_SCHEMA_VERSION}")]
    Version { path: String, found: u32 },
    #[error("sample ({system}, {language}) appears in more than one measurements input")]
    Duplicate { system: String, language: String },
}

/// Reads a measurements file; `.csv` files are tables, anything else the JSON document.
pub fn read_measurements(path: &Path) -> Result<Vec<CompressionMeasurement>, MeasurementsError> {
    let shown = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| MeasurementsError::Io {
        path: shown.clone(),
        source,
    })?;
    let malformed = |message: String| MeasurementsError::Malformed {
        path: shown.clone(),
        message,
    };
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return read_measurements_csv(bytes.as_slice()).map_err(|e| malformed(e.to_string()));
    }
    let doc: MeasurementsFile = serde_json::from_slice(&bytes).map_err(|e| malformed(e.to_string()))?;
    if doc.schema_version != MEASUREMENTS_SCHEMA_VERSION {
        return Err(MeasurementsError::Version {
            path: shown,
            found: doc.schema_version,
        });
    }
    Ok(doc.measurements)
}

/// Concatenates several measurement sets, rejecting a sample seen twice.
pub fn merge_measurements(
    sets: impl IntoIterator<Item = Vec<CompressionMeasurement>>,
) -> Result<Vec<CompressionMeasurement>, MeasurementsError> {
    let mut seen = BTreeSet::new();
    let mut all = Vec::new();
    for set in sets {
        for m in set {
            if !seen.insert((m.system_id.clone(), m.language_id.clone())) {
                return Err(MeasurementsError::Duplicate {
                    system: m.system_id,
                    language: m.language_id,
                });
            }
            all.push(m);
        }
    }
    Ok(all)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
