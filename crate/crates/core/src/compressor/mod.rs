//! Information-content estimation by whole-sample stream compression.
//!
//! The built-in codec is an LZ77-family compressor with a single window that
//! spans the entire sample (64 MiB by default), so repetition is found no
//! matter how far apart it occurs. There are no block boundaries and the
//! compression level is fixed, which makes every ratio reproducible.
//!
//! Compression ratio is always `original_bytes / compressed_bytes`: redundant
//! (verbose) input gets a ratio above one.
//!
//! Container layout produced by [`encode`]:
//!
//! ```text
//! "CZ" | version (1) | mode (0 = stored, 1 = coded) | original length (u64 LE) | payload
//! ```
//!
//! A coded payload that would be larger than the input is replaced by the
//! stored bytes, so `encode(x).len() <= x.len() + HEADER_LEN` for every input.

mod decoder;
mod encoder;
mod external;
mod model;
mod range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cleaner::CleanedSample;

pub const HEADER_LEN: usize = 12;
pub const DEFAULT_WINDOW: u64 = 64 << 20;
/// Smallest bounded window accepted by [`CompressorSpec`].
pub const MIN_WINDOW: u64 = 16 << 20;
pub const BUILTIN_NAME: &str = "builtin-lz";

const MAGIC: &[u8; 2] = b"CZ";
const VERSION: u8 = 1;
const MODE_STORED: u8 = 0;
const MODE_CODED: u8 = 1;

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("cannot compress an empty input")]
    EmptyInput,
    #[error("input of {0} bytes exceeds the 4 GiB limit of the built-in codec")]
    InputTooLarge(usize),
    #[error("invalid compressor spec: {0}")]
    InvalidSpec(String),
    #[error("failed to start `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("`{command}` exited with status {status:?}: {stderr}")]
    ExternalFailed {
        command: String,
        status: Option<i32>,
        stderr: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("missing container magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown container mode {0}")]
    UnknownMode(u8),
    #[error("compressed stream is truncated")]
    Truncated,
    #[error("match distance points before the start of the output")]
    BadDistance,
    #[error("match runs past the declared length")]
    Overrun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressorKind {
    BuiltinLz,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub name: String,
    pub kind: CompressorKind,
    /// Match window of the built-in codec; 0 means the whole input.
    pub window_bytes: u64,
    /// argv of an external compressor reading stdin and writing stdout.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external_command: Vec<String>,
}

impl Default for CompressorSpec {
    fn default() -> Self {
        Self::builtin()
    }
}

impl CompressorSpec {
    pub fn builtin() -> Self {
        Self {
            name: BUILTIN_NAME.to_string(),
            kind: CompressorKind::BuiltinLz,
            window_bytes: DEFAULT_WINDOW,
            external_command: Vec::new(),
        }
    }

    pub fn builtin_with_window(window_bytes: u64) -> Result<Self, CompressError> {
        let spec = Self {
            window_bytes,
            ..Self::builtin()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn external(name: impl Into<String>, argv: Vec<String>) -> Result<Self, CompressError> {
        let spec = Self {
            name: name.into(),
            kind: CompressorKind::External,
            window_bytes: 0,
            external_command: argv,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CompressError> {
        if self.name.trim().is_empty() {
            return Err(CompressError::InvalidSpec("name is empty".into()));
        }
        match self.kind {
            CompressorKind::BuiltinLz => {
                if self.window_bytes != 0 && self.window_bytes < MIN_WINDOW {
                    return Err(CompressError::InvalidSpec(format!(
                        "window of {} bytes is below the {} byte minimum",
                        self.window_bytes, MIN_WINDOW
                    )));
                }
            }
            CompressorKind::External => {
                if self.external_command.is_empty() || self.external_command[0].is_empty() {
                    return Err(CompressError::InvalidSpec("external compressor needs a command".into()));
                }
            }
        }
        Ok(())
    }
}

/// Compresses `data` with the built-in codec and the default window.
pub fn encode(data: &[u8]) -> Vec<u8> {
    encode_with_window(data, DEFAULT_WINDOW).expect("input within codec limits")
}

pub fn encode_with_window(data: &[u8], window_bytes: u64) -> Result<Vec<u8>, CompressError> {
    if data.len() >= u32::MAX as usize {
        return Err(CompressError::InputTooLarge(data.len()));
    }
    let window = match window_bytes {
        0 => usize::MAX,
        w => usize::try_from(w).unwrap_or(usize::MAX),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + data.len() / 3);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(MODE_CODED);
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    if data.is_empty() {
        return Ok(out);
    }
    let mut out = encoder::encode_tokens(data, window, out);
    if out.len() > HEADER_LEN + data.len() {
        out.truncate(HEADER_LEN);
        out[3] = MODE_STORED;
        out.extend_from_slice(data);
    }
    Ok(out)
}

pub fn decode(container: &[u8]) -> Result<Vec<u8>, CodecError> {
    if container.len() < HEADER_LEN {
        return Err(if container.starts_with(MAGIC) || container.len() < 2 {
            CodecError::Truncated
        } else {
            CodecError::BadMagic
        });
    }
    if &container[..2] != MAGIC {
        return Err(CodecError::BadMagic);
    }
    if container[2] != VERSION {
        return Err(CodecError::UnsupportedVersion(container[2]));
    }
    let len = u64::from_le_bytes(container[4..12].try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| CodecError::Overrun)?;
    let payload = &container[HEADER_LEN..];
    match container[3] {
        MODE_STORED if payload.len() == len => Ok(payload.to_vec()),
        MODE_STORED => Err(CodecError::Truncated),
        MODE_CODED => decoder::decode_tokens(payload, len),
        other => Err(CodecError::UnknownMode(other)),
    }
}

/// Compressed size of `input` under `spec`.
pub fn compress(input: &[u8], spec: &CompressorSpec) -> Result<u64, CompressError> {
    if input.is_empty() {
        return Err(CompressError::EmptyInput);
    }
    spec.validate()?;
    match spec.kind {
        CompressorKind::BuiltinLz => Ok(encode_with_window(input, spec.window_bytes)?.len() as u64),
        CompressorKind::External => external::compressed_len(&spec.external_command, input),
    }
}

/// One compressed (system, language) sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionMeasurement {
    pub system_id: String,
    pub language_id: String,
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub compression_ratio: f64,
    pub loc: u64,
    pub compressor_name: String,
}

impl CompressionMeasurement {
    pub fn new(
        system_id: impl Into<String>,
        language_id: impl Into<String>,
        original_bytes: u64,
        compressed_bytes: u64,
        loc: u64,
        compressor_name: impl Into<String>,
    ) -> Self {
        Self {
            system_id: system_id.into(),
            language_id: language_id.into(),
            original_bytes,
            compressed_bytes,
            compression_ratio: original_bytes as f64 / compressed_bytes as f64,
            loc,
            compressor_name: compressor_name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measured {
    Ratio(CompressionMeasurement),
    /// The sample had no retained code; nothing to measure.
    SkippedEmpty,
}

pub fn measure(sample: &CleanedSample, spec: &CompressorSpec) -> Result<Measured, CompressError> {
    if sample.cleaned_bytes.is_empty() {
        return Ok(Measured::SkippedEmpty);
    }
    let compressed = compress(&sample.cleaned_bytes, spec)?;
    Ok(Measured::Ratio(CompressionMeasurement::new(
        &sample.system_id,
        &sample.language_id,
        sample.cleaned_bytes.len() as u64,
        compressed,
        sample.loc,
        &spec.name,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(bytes: &[u8]) -> CleanedSample {
        CleanedSample {
            system_id: "sys".into(),
            language_id: "java".into(),
            cleaned_bytes: bytes.to_vec(),
            loc: bytes.iter().filter(|&&b| b == b'\n').count() as u64,
            original_bytes_count: bytes.len() as u64,
            files_included: 1,
            physical_lines: 0,
            decode_warnings: 0,
            unterminated_comments: 0,
        }
    }

    #[test]
    fn empty_input_is_a_precondition_error() {
        assert!(matches!(
            compress(b"", &CompressorSpec::builtin()),
            Err(CompressError::EmptyInput)
        ));
    }

    #[test]
    fn empty_sample_is_skipped_not_failed() {
        let m = measure(&sample(b""), &CompressorSpec::builtin()).unwrap();
        assert_eq!(m, Measured::SkippedEmpty);
    }

    #[test]
    fn ratio_is_original_over_compressed() {
        let m = CompressionMeasurement::new("s", "java", 1_000_000, 250_000, 10, "x");
        assert_eq!(m.compression_ratio, 4.0);
    }

    #[test]
    fn measuring_twice_is_identical() {
        let text = b"public int x = 1;\npublic int y = 2;\n".repeat(200);
        let a = measure(&sample(&text), &CompressorSpec::builtin()).unwrap();
        let b = measure(&sample(&text), &CompressorSpec::builtin()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_windows_are_rejected() {
        assert!(CompressorSpec::builtin_with_window(1 << 20).is_err());
        assert!(CompressorSpec::builtin_with_window(0).is_ok());
        assert!(CompressorSpec::builtin_with_window(MIN_WINDOW).is_ok());
    }

    #[test]
    fn round_trip_small_cases() {
        for input in [&b""[..], b"a", b"ab", b"abcabcabcabc", b"\0\0\0\0\0\0\0\0\0"] {
            assert_eq!(decode(&encode(input)).unwrap(), input);
        }
    }

    #[test]
    fn repeated_line_compresses_far_below_sixteen_kib() {
        let input = b"abc\n".repeat(1 << 18);
        let len = compress(&input, &CompressorSpec::builtin()).unwrap();
        assert!(len < 16 << 10, "compressed to {len}");
    }

    #[test]
    fn corrupt_containers_are_rejected() {
        let mut c = encode(b"hello hello hello hello");
        assert_eq!(decode(&c[..5]), Err(CodecError::Truncated));
        c[0] = b'X';
        assert_eq!(decode(&c), Err(CodecError::BadMagic));
        let mut c = encode(b"hello");
        c[2] = 9;
        assert_eq!(decode(&c), Err(CodecError::UnsupportedVersion(9)));
    }

    #[test]
    fn external_failure_carries_stderr() {
        let spec =
            CompressorSpec::external("fails", vec!["sh".into(), "-c".into(), "echo boom >&2; exit 3".into()]).unwrap();
        match compress(b"data", &spec) {
            Err(CompressError::ExternalFailed { status, stderr, .. }) => {
                assert_eq!(status, Some(3));
                assert_eq!(stderr, "boom");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn external_counts_stdout_bytes() {
        let spec = CompressorSpec::external("cat", vec!["cat".into()]).unwrap();
        assert_eq!(compress(b"12345", &spec).unwrap(), 5);
    }
}
