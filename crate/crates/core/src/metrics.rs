//! CR-weighted volume metrics for one system.
//!
//! Weighting divides a language's LOC by its characteristic compression
//! ratio, so verbose languages shrink and dense ones keep their volume.
//! Every report carries raw and weighted figures side by side.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rayon::prelude::*;

use crate::benchmark::{BenchmarkDb, ConcisenessFactor};
use crate::cleaner::{code_only, CleanError, SampleBuilder};
use crate::corpus::{LanguageProfile, ProfileSet, SystemEntry};

/// Written into every McCabe report so readers know what was counted.
pub const MCCABE_METHOD_NOTE: &str = "aggregate per-language estimate: decision keywords and \
operators outside strings and comments plus a heuristic function count; not per-function averages";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no conciseness factor for {}", .languages.join(", "))]
    MissingFactor { languages: Vec<String> },
    #[error("no language with LOC > 0")]
    NoLanguages,
    #[error("no language with a McCabe count > 0")]
    NoMcCabe,
    #[error("unknown fallback policy `{0}` (expected error, cr=1.0 or cr=median)")]
    UnknownFallback(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What to do for a language the benchmark has no factor for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackPolicy {
    /// Leave the language out of weighted figures and flag it.
    #[default]
    Error,
    /// Weigh it with CR 1.0.
    Unit,
    /// Weigh it with the benchmark's median characteristic CR.
    BenchmarkMedian,
}

impl FromStr for FallbackPolicy {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(Self::Error),
            "cr=1.0" | "cr=1" | "unit" => Ok(Self::Unit),
            "cr=median" | "median" => Ok(Self::BenchmarkMedian),
            other => Err(MetricsError::UnknownFallback(other.to_string())),
        }
    }
}

impl fmt::Display for FallbackPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Error => "error",
            Self::Unit => "cr=1.0",
            Self::BenchmarkMedian => "cr=median",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorSource {
    Benchmark,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedCr {
    pub cr: f64,
    pub source: FactorSource,
}

/// `loc / cr_characteristic`.
pub fn weighted_loc(loc: u64, factor: &ConcisenessFactor) -> f64 {
    loc as f64 / factor.cr_characteristic
}

/// The CR to weigh `language_id` with, or `MissingFactor` under [`FallbackPolicy::Error`].
pub fn resolve_cr(
    language_id: &str,
    benchmark: &BenchmarkDb,
    fallback: FallbackPolicy,
) -> Result<ResolvedCr, MetricsError> {
    if let Some(f) = benchmark.factor(language_id) {
        return Ok(ResolvedCr {
            cr: f.cr_characteristic,
            source: FactorSource::Benchmark,
        });
    }
    let missing = || MetricsError::MissingFactor {
        languages: vec![language_id.to_string()],
    };
    let cr = match fallback {
        FallbackPolicy::Error => return Err(missing()),
        FallbackPolicy::Unit => 1.0,
        FallbackPolicy::BenchmarkMedian => benchmark.median_cr().ok_or_else(missing)?,
    };
    Ok(ResolvedCr {
        cr,
        source: FactorSource::Fallback,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageVolume {
    pub language_id: String,
    pub raw_loc: u64,
    pub cr: f64,
    pub factor_source: FactorSource,
    pub weighted_loc: f64,
    pub raw_share: f64,
    pub weighted_share: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnweighedLanguage {
    pub language_id: String,
    pub raw_loc: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeBreakdown {
    pub system_id: String,
    pub fallback: FallbackPolicy,
    /// Sorted by language id; shares are over these languages only.
    pub languages: Vec<LanguageVolume>,
    pub missing: Vec<UnweighedLanguage>,
}

type Partition = (Vec<(String, u64, ResolvedCr)>, Vec<UnweighedLanguage>);

/// Splits the languages of `locs` into weighed (with their CR) and missing ones.
fn partition(
    locs: &BTreeMap<String, u64>,
    benchmark: &BenchmarkDb,
    fallback: FallbackPolicy,
) -> Result<Partition, MetricsError> {
    let mut weighed = Vec::new();
    let mut missing = Vec::new();
    for (language, &loc) in locs {
        if loc == 0 {
            continue;
        }
        match resolve_cr(language, benchmark, fallback) {
            Ok(cr) => weighed.push((language.clone(), loc, cr)),
            Err(MetricsError::MissingFactor { .. }) => missing.push(UnweighedLanguage {
                language_id: language.clone(),
                raw_loc: loc,
                reason: "no conciseness factor in benchmark".into(),
            }),
            Err(e) => return Err(e),
        }
    }
    if weighed.is_empty() {
        if missing.is_empty() {
            return Err(MetricsError::NoLanguages);
        }
        return Err(MetricsError::MissingFactor {
            languages: missing.into_iter().map(|m| m.language_id).collect(),
        });
    }
    Ok((weighed, missing))
}

/// Raw and weighted volume shares of the languages in `locs`.
pub fn volume_breakdown(
    system_id: &str,
    locs: &BTreeMap<String, u64>,
    benchmark: &BenchmarkDb,
    fallback: FallbackPolicy,
) -> Result<VolumeBreakdown, MetricsError> {
    let (weighed, missing) = partition(locs, benchmark, fallback)?;
    let raw_total: f64 = weighed.iter().map(|(_, loc, _)| *loc as f64).sum();
    let weighted_total: f64 = weighed.iter().map(|(_, loc, r)| *loc as f64 / r.cr).sum();
    let languages = weighed
        .into_iter()
        .map(|(language_id, raw_loc, resolved)| {
            let weighted = raw_loc as f64 / resolved.cr;
            LanguageVolume {
                language_id,
                raw_loc,
                cr: resolved.cr,
                factor_source: resolved.source,
                weighted_loc: weighted,
                raw_share: raw_loc as f64 / raw_total,
                weighted_share: weighted / weighted_total,
            }
        })
        .collect();
    Ok(VolumeBreakdown {
        system_id: system_id.to_string(),
        fallback,
        languages,
        missing,
    })
}

/// Writes `language,raw_loc,weighted_loc,raw_share,weighted_share`.
pub fn write_volume_csv(breakdown: &VolumeBreakdown, sink: impl Write) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["language", "raw_loc", "weighted_loc", "raw_share", "weighted_share"])?;
    for l in &breakdown.languages {
        w.write_record([
            l.language_id.clone(),
            l.raw_loc.to_string(),
            l.weighted_loc.to_string(),
            l.raw_share.to_string(),
            l.weighted_share.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Stacked-bar series: one row per language, one column per bar (percent).
pub fn write_volume_plot_data(breakdown: &VolumeBreakdown, sink: impl Write) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["language", "basic", "weighted"])?;
    for l in &breakdown.languages {
        w.write_record([
            l.language_id.clone(),
            (100.0 * l.raw_share).to_string(),
            (100.0 * l.weighted_share).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct McCabeCount {
    pub decisions: u64,
    pub functions: u64,
}

impl McCabeCount {
    pub fn total(self) -> u64 {
        self.decisions + self.functions
    }
}

impl std::ops::AddAssign for McCabeCount {
    fn add_assign(&mut self, other: Self) {
        self.decisions += other.decisions;
        self.functions += other.functions;
    }
}

enum FunctionRule {
    Keywords(&'static [&'static str]),
    /// `name(...) {`, optionally also counting `=>` lambdas.
    Brace {
        arrows: bool,
    },
}

struct Dialect {
    keywords: &'static [&'static str],
    operators: bool,
    ternary: bool,
    case_insensitive: bool,
    functions: FunctionRule,
}

const BASE_KEYWORDS: &[&str] = &["if", "for", "while", "case", "catch"];

fn dialect(language_id: &str) -> Dialect {
    let brace = Dialect {
        keywords: BASE_KEYWORDS,
        operators: true,
        ternary: true,
        case_insensitive: false,
        functions: FunctionRule::Brace { arrows: false },
    };
    match language_id {
        "python" => Dialect {
            keywords: &["if", "elif", "for", "while", "case", "except", "and", "or"],
            operators: false,
            ternary: false,
            functions: FunctionRule::Keywords(&["def"]),
            ..brace
        },
        "shell" => Dialect {
            keywords: &["if", "elif", "for", "while", "until", "case"],
            ternary: false,
            ..brace
        },
        "ruby" => Dialect {
            keywords: &["if", "elsif", "unless", "for", "while", "until", "when", "rescue"],
            functions: FunctionRule::Keywords(&["def"]),
            ..brace
        },
        "kotlin" => Dialect {
            keywords: &["if", "for", "while", "when", "catch"],
            ternary: false,
            functions: FunctionRule::Keywords(&["fun"]),
            ..brace
        },
        "go" => Dialect {
            ternary: false,
            functions: FunctionRule::Keywords(&["func"]),
            ..brace
        },
        "swift" => Dialect {
            keywords: &["if", "guard", "for", "while", "case", "catch"],
            functions: FunctionRule::Keywords(&["func"]),
            ..brace
        },
        "rust" => Dialect {
            ternary: false,
            functions: FunctionRule::Keywords(&["fn"]),
            ..brace
        },
        "php" => Dialect {
            functions: FunctionRule::Keywords(&["function"]),
            ..brace
        },
        "javascript" | "typescript" => Dialect {
            functions: FunctionRule::Brace { arrows: true },
            ..brace
        },
        "sql" => Dialect {
            keywords: &["if", "while", "when"],
            operators: false,
            ternary: false,
            case_insensitive: true,
            functions: FunctionRule::Keywords(&["function", "procedure"]),
        },
        _ => brace,
    }
}

/// Words that look like `name(` but open a control construct.
const NOT_FUNCTIONS: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "using",
    "lock",
    "fixed",
    "foreach",
    "synchronized",
    "return",
    "sizeof",
    "else",
    "do",
    "elif",
    "until",
    "with",
    "await",
    "typeof",
    "new",
    "when",
];

/// Words allowed between `)` and `{` of a definition.
const QUALIFIERS: &[&str] = &["const", "noexcept", "override", "final", "throws", "mutable", "async"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Word(&'a str),
    Punct(u8),
}

fn tokens(code: &str) -> Vec<(Tok<'_>, bool)> {
    let bytes = code.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut space_before = true;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            space_before = true;
            i += 1;
            continue;
        }
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b >= 0x80 {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$' || bytes[i] >= 0x80)
            {
                i += 1;
            }
            out.push((Tok::Word(&code[start..i]), space_before));
        } else {
            out.push((Tok::Punct(b), space_before));
            i += 1;
        }
        space_before = false;
    }
    out
}

fn keyword_eq(word: &str, keyword: &str, case_insensitive: bool) -> bool {
    if case_insensitive {
        word.eq_ignore_ascii_case(keyword)
    } else {
        word == keyword
    }
}

/// Index just past the `)` matching the `(` at `open`, if any.
fn skip_parens(toks: &[(Tok<'_>, bool)], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, (t, _)) in toks.iter().enumerate().skip(open) {
        match t {
            Tok::Punct(b'(') => depth += 1,
            Tok::Punct(b')') => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            Tok::Punct(b';' | b'{' | b'}') => return None,
            _ => {}
        }
    }
    None
}

fn opens_body(toks: &[(Tok<'_>, bool)], mut i: usize) -> bool {
    let mut after_throws = false;
    while let Some((t, _)) = toks.get(i) {
        match *t {
            Tok::Punct(b'{') => return true,
            Tok::Word(w) if QUALIFIERS.contains(&w) => after_throws |= w == "throws",
            Tok::Word(_) if after_throws => {}
            Tok::Punct(b',' | b'.') if after_throws => {}
            _ => return false,
        }
        i += 1;
    }
    false
}

/// Decision points and function definitions in source text.
///
/// Comments and string literals are ignored; keywords only count as whole
/// words. Ternary `?` counts only when surrounded by whitespace, which keeps
/// optional-type and null-safety markers out.
pub fn mccabe_estimate(text: &str, profile: &LanguageProfile) -> McCabeCount {
    let d = dialect(&profile.language_id);
    let code = code_only(text, profile);
    let toks = tokens(&code);
    let mut count = McCabeCount::default();
    for (i, &(tok, space_before)) in toks.iter().enumerate() {
        let next = toks.get(i + 1).copied();
        match tok {
            Tok::Word(w) => {
                if d.keywords.iter().any(|k| keyword_eq(w, k, d.case_insensitive)) {
                    count.decisions += 1;
                }
                match d.functions {
                    FunctionRule::Keywords(kws) => {
                        if kws.iter().any(|k| keyword_eq(w, k, d.case_insensitive)) {
                            count.functions += 1;
                        }
                    }
                    FunctionRule::Brace { .. } => {
                        if matches!(next, Some((Tok::Punct(b'('), _)))
                            && !NOT_FUNCTIONS.contains(&w)
                            && !w.as_bytes()[0].is_ascii_digit()
                        {
                            if let Some(close) = skip_parens(&toks, i + 1) {
                                if opens_body(&toks, close) {
                                    count.functions += 1;
                                }
                            }
                        }
                    }
                }
            }
            Tok::Punct(b'&') | Tok::Punct(b'|') if d.operators => {
                let prev = i.checked_sub(1).map(|p| toks[p].0);
                if next.map(|n| n.0) == Some(tok) && prev != Some(tok) && !next.is_some_and(|n| n.1) {
                    let third = toks.get(i + 2).map(|t| t.0);
                    if third != Some(tok) {
                        count.decisions += 1;
                    }
                }
            }
            Tok::Punct(b'?') if d.ternary => {
                if space_before && next.is_some_and(|(_, spaced)| spaced) {
                    count.decisions += 1;
                }
            }
            Tok::Punct(b'=') => {
                if let FunctionRule::Brace { arrows: true } = d.functions {
                    if matches!(next, Some((Tok::Punct(b'>'), false))) {
                        count.functions += 1;
                    }
                }
            }
            _ => {}
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageMcCabe {
    pub language_id: String,
    pub raw_loc: u64,
    pub cr: f64,
    pub factor_source: FactorSource,
    pub weighted_loc: f64,
    pub decisions: u64,
    pub functions: u64,
    pub total_mccabe: u64,
    pub raw_ratio: f64,
    pub weighted_ratio: f64,
    /// Percent of the cross-language mean raw ratio.
    pub normalized_raw: f64,
    /// Percent of the cross-language mean weighted ratio.
    pub normalized_weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCabeReport {
    pub system_id: String,
    pub fallback: FallbackPolicy,
    pub method: String,
    pub languages: Vec<LanguageMcCabe>,
    pub excluded: Vec<UnweighedLanguage>,
}

/// Per-language input of [`mccabe_report`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSize {
    pub loc: u64,
    pub mccabe: McCabeCount,
}

/// Cleaned LOC and McCabe estimate of every language in `system`.
///
/// Each file is read once; McCabe counting runs on the original text so that
/// block comments spanning removed lines are still recognized.
pub fn system_sizes(system: &SystemEntry, profiles: &ProfileSet) -> Result<BTreeMap<String, LanguageSize>, CleanError> {
    let languages: Vec<(&String, &LanguageProfile)> = system
        .files
        .keys()
        .filter_map(|l| profiles.get(l).map(|p| (l, p)))
        .collect();
    languages
        .par_iter()
        .map(|&(language, profile)| {
            let mut builder = SampleBuilder::new(&system.system_id, profile);
            let mut mccabe = McCabeCount::default();
            for path in system.absolute_files(language) {
                let raw = std::fs::read(&path).map_err(|source| CleanError { path, source })?;
                builder.push_file(&raw);
                mccabe += mccabe_estimate(&String::from_utf8_lossy(&raw), profile);
            }
            let loc = builder.finish().loc;
            Ok((language.clone(), LanguageSize { loc, mccabe }))
        })
        .collect()
}

/// LOC per McCabe point, raw and weighted, normalized to the mean over languages.
pub fn mccabe_report(
    system_id: &str,
    sizes: &BTreeMap<String, LanguageSize>,
    benchmark: &BenchmarkDb,
    fallback: FallbackPolicy,
) -> Result<McCabeReport, MetricsError> {
    let locs = sizes.iter().map(|(l, s)| (l.clone(), s.loc)).collect();
    let (weighed, mut excluded) = partition(&locs, benchmark, fallback)?;
    let mut rows = Vec::new();
    for (language_id, raw_loc, resolved) in weighed {
        let mccabe = sizes[&language_id].mccabe;
        if mccabe.total() == 0 {
            excluded.push(UnweighedLanguage {
                language_id,
                raw_loc,
                reason: "no decision points or functions found".into(),
            });
            continue;
        }
        let weighted = raw_loc as f64 / resolved.cr;
        let total = mccabe.total() as f64;
        rows.push(LanguageMcCabe {
            language_id,
            raw_loc,
            cr: resolved.cr,
            factor_source: resolved.source,
            weighted_loc: weighted,
            decisions: mccabe.decisions,
            functions: mccabe.functions,
            total_mccabe: mccabe.total(),
            raw_ratio: raw_loc as f64 / total,
            weighted_ratio: weighted / total,
            normalized_raw: 0.0,
            normalized_weighted: 0.0,
        });
    }
    if rows.is_empty() {
        return Err(MetricsError::NoMcCabe);
    }
    excluded.sort_by(|a, b| a.language_id.cmp(&b.language_id));
    let n = rows.len() as f64;
    let mean_raw = rows.iter().map(|r| r.raw_ratio).sum::<f64>() / n;
    let mean_weighted = rows.iter().map(|r| r.weighted_ratio).sum::<f64>() / n;
    for r in &mut rows {
        r.normalized_raw = 100.0 * r.raw_ratio / mean_raw;
        r.normalized_weighted = 100.0 * r.weighted_ratio / mean_weighted;
    }
    Ok(McCabeReport {
        system_id: system_id.to_string(),
        fallback,
        method: MCCABE_METHOD_NOTE.to_string(),
        languages: rows,
        excluded,
    })
}

pub fn write_mccabe_csv(report: &McCabeReport, sink: impl Write) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "language",
        "raw_loc",
        "weighted_loc",
        "total_mccabe",
        "raw_ratio",
        "weighted_ratio",
        "normalized_raw",
        "normalized_weighted",
    ])?;
    for r in &report.languages {
        w.write_record([
            r.language_id.clone(),
            r.raw_loc.to_string(),
            r.weighted_loc.to_string(),
            r.total_mccabe.to_string(),
            r.raw_ratio.to_string(),
            r.weighted_ratio.to_string(),
            r.normalized_raw.to_string(),
            r.normalized_weighted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
