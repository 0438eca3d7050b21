//! Corpus discovery: walk system trees and group source files by (system, language).
//!
//! Every immediate child directory of a root is one system; with
//! `single_system` the root itself is the system. Every regular file ends up
//! either assigned to exactly one (system, language) pair or listed in
//! `skipped` with a reason. Manifests are a pure function of the tree and the
//! options: file lists are sorted by their `/`-joined relative path.

mod profile;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use globset::{GlobBuilder, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

pub use profile::{
    default_profiles, detect_language, load_language_profiles, LanguageProfile, ProfileError, ProfileSet,
    StringDelimiter,
};

/// Bytes inspected for a NUL when deciding whether a file is binary.
pub const BINARY_PROBE_BYTES: usize = 8 << 10;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("cannot read corpus root {path}: {source}")]
    UnreadableRoot {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid exclude pattern `{pattern}`: {message}")]
    BadGlob { pattern: String, message: String },
    #[error("system `{0}` appears under more than one root")]
    DuplicateSystem(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub follow_symlinks: bool,
    pub exclude_globs: Vec<String>,
    /// Treat each root as one system instead of one system per child directory.
    pub single_system: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    Binary,
    Excluded,
    UnknownLanguage,
    Unreadable,
    OutsideSystem,
    Symlink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: SkipReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemEntry {
    pub system_id: String,
    /// Directory of the system; file paths below are relative to it.
    pub root: PathBuf,
    pub files: BTreeMap<String, Vec<PathBuf>>,
}

impl SystemEntry {
    pub fn file_count(&self) -> usize {
        self.files.values().map(Vec::len).sum()
    }

    pub fn absolute_files(&self, language_id: &str) -> Vec<PathBuf> {
        self.files
            .get(language_id)
            .map(|v| v.iter().map(|p| self.root.join(p)).collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub systems: Vec<SystemEntry>,
    pub skipped: Vec<SkippedFile>,
}

impl CorpusManifest {
    pub fn system(&self, system_id: &str) -> Option<&SystemEntry> {
        self.systems.iter().find(|s| s.system_id == system_id)
    }
}

enum Verdict {
    Assigned(String),
    Skipped(SkipReason, Option<String>),
}

struct Candidate {
    system: usize,
    /// Path relative to the system root, `/`-joined.
    rel: String,
    /// Path relative to the corpus root, used for exclusion matching.
    corpus_rel: String,
    abs: PathBuf,
}

fn slash_join(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn build_globs(patterns: &[String]) -> Result<GlobSet, ScanError> {
    let mut builder = GlobSetBuilder::new();
    for pattern in patterns {
        let glob = GlobBuilder::new(pattern)
            .literal_separator(true)
            .build()
            .map_err(|e| ScanError::BadGlob {
                pattern: pattern.clone(),
                message: e.to_string(),
            })?;
        builder.add(glob);
    }
    builder.build().map_err(|e| ScanError::BadGlob {
        pattern: patterns.join(", "),
        message: e.to_string(),
    })
}

fn looks_binary(path: &Path) -> std::io::Result<bool> {
    let mut buf = vec![0u8; BINARY_PROBE_BYTES];
    let mut file = File::open(path)?;
    let mut filled = 0;
    while filled < buf.len() {
        match file.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(buf[..filled].contains(&0))
}

fn classify(c: &Candidate, excludes: &GlobSet, profiles: &ProfileSet) -> Verdict {
    if excludes.is_match(&c.corpus_rel) {
        return Verdict::Skipped(SkipReason::Excluded, None);
    }
    match looks_binary(&c.abs) {
        Err(e) => Verdict::Skipped(SkipReason::Unreadable, Some(e.to_string())),
        Ok(true) => Verdict::Skipped(SkipReason::Binary, None),
        Ok(false) => match profiles.detect(&c.abs) {
            Some(lang) => Verdict::Assigned(lang.to_string()),
            None => Verdict::Skipped(SkipReason::UnknownLanguage, None),
        },
    }
}

/// Walks `roots` and builds the (system, language) manifest.
pub fn scan_corpus(
    roots: &[PathBuf],
    profiles: &ProfileSet,
    options: &ScanOptions,
) -> Result<CorpusManifest, ScanError> {
    let excludes = build_globs(&options.exclude_globs)?;
    let mut systems: Vec<SystemEntry> = Vec::new();
    let mut skipped = Vec::new();
    let mut candidates = Vec::new();

    for root in roots {
        let unreadable = |source| ScanError::UnreadableRoot {
            path: root.clone(),
            source,
        };
        let mut children: Vec<_> = std::fs::read_dir(root)
            .map_err(unreadable)?
            .collect::<Result<_, _>>()
            .map_err(unreadable)?;
        children.sort_by_key(|e| e.file_name());

        let system_dirs: Vec<(String, PathBuf, PathBuf)> = if options.single_system {
            let name = std::fs::canonicalize(root)
                .ok()
                .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .unwrap_or_else(|| slash_join(root));
            vec![(name, root.clone(), PathBuf::new())]
        } else {
            let mut dirs = Vec::new();
            for child in children {
                let path = child.path();
                let name = child.file_name().to_string_lossy().into_owned();
                let is_dir = if options.follow_symlinks {
                    path.is_dir()
                } else {
                    child.file_type().map(|t| t.is_dir()).unwrap_or(false)
                };
                if is_dir {
                    dirs.push((name.clone(), path, PathBuf::from(name)));
                } else {
                    let symlink = child.file_type().map(|t| t.is_symlink()).unwrap_or(false);
                    let reason = if symlink && !options.follow_symlinks {
                        SkipReason::Symlink
                    } else {
                        SkipReason::OutsideSystem
                    };
                    skipped.push(SkippedFile {
                        path,
                        reason,
                        detail: None,
                    });
                }
            }
            dirs
        };

        for (system_id, system_root, prefix) in system_dirs {
            if systems.iter().any(|s| s.system_id == system_id) {
                return Err(ScanError::DuplicateSystem(system_id));
            }
            let index = systems.len();
            systems.push(SystemEntry {
                system_id,
                root: system_root.clone(),
                files: BTreeMap::new(),
            });
            let walker = WalkDir::new(&system_root)
                .follow_links(options.follow_symlinks)
                .sort_by_file_name();
            for entry in walker {
                let entry = match entry {
                    Ok(e) => e,
                    Err(e) => {
                        skipped.push(SkippedFile {
                            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| system_root.clone()),
                            reason: SkipReason::Unreadable,
                            detail: Some(e.to_string()),
                        });
                        continue;
                    }
                };
                let ft = entry.file_type();
                if ft.is_dir() {
                    continue;
                }
                if ft.is_symlink() {
                    skipped.push(SkippedFile {
                        path: entry.path().to_path_buf(),
                        reason: SkipReason::Symlink,
                        detail: None,
                    });
                    continue;
                }
                let rel_path = entry
                    .path()
                    .strip_prefix(&system_root)
                    .unwrap_or(entry.path())
                    .to_path_buf();
                candidates.push(Candidate {
                    system: index,
                    rel: slash_join(&rel_path),
                    corpus_rel: slash_join(&prefix.join(&rel_path)),
                    abs: entry.path().to_path_buf(),
                });
            }
        }
    }

    let verdicts: Vec<Verdict> = candidates
        .par_iter()
        .map(|c| classify(c, &excludes, profiles))
        .collect();

    for (c, verdict) in candidates.into_iter().zip(verdicts) {
        match verdict {
            Verdict::Assigned(lang) => systems[c.system]
                .files
                .entry(lang)
                .or_default()
                .push(PathBuf::from(c.rel)),
            Verdict::Skipped(reason, detail) => skipped.push(SkippedFile {
                path: c.abs,
                reason,
                detail,
            }),
        }
    }
    for system in &mut systems {
        for files in system.files.values_mut() {
            files.sort_by_cached_key(|p| slash_join(p));
            files.dedup();
        }
    }
    skipped.sort_by_cached_key(|s| (slash_join(&s.path), s.reason));
    Ok(CorpusManifest { systems, skipped })
}
