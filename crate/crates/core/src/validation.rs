//! Agreement between the local conciseness ranking and external rankings.
//!
//! External rankings are plain `language,score` CSV files. Language names
//! are lower-cased and mapped through an alias table (`alias,canonical`)
//! onto profile ids before matching.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::BenchmarkDb;

pub const MIN_PAIRS: usize = 3;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("need at least {MIN_PAIRS} pairs, got {found}{}", overlap_note(.overlap))]
    InsufficientData { found: usize, overlap: Vec<String> },
    #[error("rank correlation is undefined: all scores on one side are tied")]
    Undefined,
    #[error("ranking `{source_name}` has {found} entries, need at least {MIN_PAIRS}")]
    TooFewEntries { source_name: String, found: usize },
    #[error("language `{language}` appears twice in `{source_name}`")]
    DuplicateLanguage { source_name: String, language: String },
    #[error("score `{value}` for `{language}` is not a finite number")]
    BadScore { language: String, value: String },
    #[error("unknown orientation `{0}` (expected same or inverted)")]
    UnknownOrientation(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn overlap_note(overlap: &[String]) -> String {
    if overlap.is_empty() {
        String::new()
    } else {
        format!(" (overlap: {})", overlap.join(", "))
    }
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho: the Pearson correlation of the average-rank vectors.
pub fn spearman(pairs: &[(f64, f64)]) -> Result<f64, ValidationError> {
    if pairs.len() < MIN_PAIRS {
        return Err(ValidationError::InsufficientData {
            found: pairs.len(),
            overlap: Vec::new(),
        });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rx = average_ranks(&xs);
    let ry = average_ranks(&ys);
    let mean = (pairs.len() + 1) as f64 / 2.0;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(ValidationError::Undefined);
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Maps external language names onto profile ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasTable {
    map: BTreeMap<String, String>,
}

const BUILTIN_ALIASES: &[(&str, &str)] = &[
    ("c#", "csharp"),
    ("cs", "csharp"),
    ("c++", "cpp"),
    ("cxx", "cpp"),
    ("js", "javascript"),
    ("ts", "typescript"),
    ("golang", "go"),
    ("py", "python"),
    ("python3", "python"),
    ("bash", "shell"),
    ("sh", "shell"),
    ("rb", "ruby"),
    ("kt", "kotlin"),
    ("rs", "rust"),
];

impl Default for AliasTable {
    fn default() -> Self {
        Self {
            map: BUILTIN_ALIASES
                .iter()
                .map(|&(a, c)| (a.to_string(), c.to_string()))
                .collect(),
        }
    }
}

impl AliasTable {
    pub fn empty() -> Self {
        Self { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, alias: &str, canonical: &str) {
        self.map.insert(normalize(alias), normalize(canonical));
    }

    /// Adds `alias,canonical` rows; later rows win.
    pub fn extend_from_csv(&mut self, source: impl Read) -> Result<(), ValidationError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        for row in reader.deserialize() {
            let (alias, canonical): (String, String) = row?;
            self.insert(&alias, &canonical);
        }
        Ok(())
    }

    pub fn canonical(&self, name: &str) -> String {
        let key = normalize(name);
        self.map.get(&key).cloned().unwrap_or(key)
    }
}

fn normalize(name: &str) -> String {
    name.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRanking {
    pub source_name: String,
    /// Canonical language id to score.
    pub entries: BTreeMap<String, f64>,
}

impl ExternalRanking {
    pub fn new(
        source_name: &str,
        rows: impl IntoIterator<Item = (String, f64)>,
        aliases: &AliasTable,
    ) -> Result<Self, ValidationError> {
        let mut entries = BTreeMap::new();
        for (name, score) in rows {
            let language = aliases.canonical(&name);
            if !score.is_finite() {
                return Err(ValidationError::BadScore {
                    language,
                    value: score.to_string(),
                });
            }
            if entries.insert(language.clone(), score).is_some() {
                return Err(ValidationError::DuplicateLanguage {
                    source_name: source_name.to_string(),
                    language,
                });
            }
        }
        if entries.len() < MIN_PAIRS {
            return Err(ValidationError::TooFewEntries {
                source_name: source_name.to_string(),
                found: entries.len(),
            });
        }
        Ok(Self {
            source_name: source_name.to_string(),
            entries,
        })
    }

    /// Reads a `language,score` CSV.
    pub fn from_csv(source_name: &str, source: impl Read, aliases: &AliasTable) -> Result<Self, ValidationError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let mut rows = Vec::new();
        for row in reader.deserialize() {
            let (language, score): (String, String) = row?;
            let value = score.parse::<f64>().map_err(|_| ValidationError::BadScore {
                language: language.clone(),
                value: score.clone(),
            })?;
            rows.push((language, value));
        }
        Self::new(source_name, rows, aliases)
    }
}

/// Whether a high external score means a high CR (`Same`) or a low one (`Inverted`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    Same,
    Inverted,
}

impl FromStr for Orientation {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "same" => Ok(Self::Same),
            "inverted" => Ok(Self::Inverted),
            other => Err(ValidationError::UnknownOrientation(other.to_string())),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Same => "same",
            Self::Inverted => "inverted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub language_id: String,
    pub local_cr: f64,
    pub external_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub source_name: String,
    pub orientation: Orientation,
    pub n: usize,
    pub rho: f64,
    pub pairs: Vec<MatchedPair>,
    pub unmatched_local: Vec<String>,
    pub unmatched_external: Vec<String>,
}

/// Rank correlation between the benchmark's characteristic CRs and `external`.
pub fn compare(
    benchmark: &BenchmarkDb,
    external: &ExternalRanking,
    orientation: Orientation,
) -> Result<ValidationReport, ValidationError> {
    let mut pairs = Vec::new();
    let mut unmatched_local = Vec::new();
    for (language, factor) in &benchmark.factors {
        match external.entries.get(language) {
            Some(&score) => pairs.push(MatchedPair {
                language_id: language.clone(),
                local_cr: factor.cr_characteristic,
                external_score: score,
            }),
            None => unmatched_local.push(language.clone()),
        }
    }
    let unmatched_external: Vec<String> = external
        .entries
        .keys()
        .filter(|l| !benchmark.factors.contains_key(*l))
        .cloned()
        .collect();
    if pairs.len() < MIN_PAIRS {
        return Err(ValidationError::InsufficientData {
            found: pairs.len(),
            overlap: pairs.into_iter().map(|p| p.language_id).collect(),
        });
    }
    let sign = match orientation {
        Orientation::Same => 1.0,
        Orientation::Inverted => -1.0,
    };
    let xy: Vec<(f64, f64)> = pairs.iter().map(|p| (p.local_cr, sign * p.external_score)).collect();
    let rho = spearman(&xy)?;
    Ok(ValidationReport {
        source_name: external.source_name.clone(),
        orientation,
        n: pairs.len(),
        rho,
        pairs,
        unmatched_local,
        unmatched_external,
    })
}
