//! Line classification and sample cleaning.
//!
//! A small state machine walks each line tracking string literals and
//! (optionally nested) block comments; block-comment and multi-line string
//! state carry over line ends. A line is kept only when it has code outside
//! comments. Kept lines are emitted verbatim except for trailing whitespace,
//! each terminated by a single LF, files concatenated in the given order.
//!
//! Known approximations: trailing comments on code lines are kept, here-docs
//! are not modelled, and a shell `#` inside a word still starts a comment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LanguageProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineClass {
    Code,
    CommentOnly,
    Blank,
}

impl LineClass {
    /// Golden-file letter: `C` code, `M` comment-only, `B` blank.
    pub fn letter(self) -> char {
        match self {
            LineClass::Code => 'C',
            LineClass::CommentOnly => 'M',
            LineClass::Blank => 'B',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'C' => Some(LineClass::Code),
            'M' => Some(LineClass::CommentOnly),
            'B' => Some(LineClass::Blank),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SpanKind {
    Code,
    Str,
    Comment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marker {
    Line,
    Block(usize),
    Str(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LexState {
    Normal,
    Block { pair: usize, depth: u32 },
    Str { delim: usize },
}

/// Incremental lexer over the lines of one file.
pub(crate) struct Lexer<'p> {
    profile: &'p LanguageProfile,
    openers: Vec<(&'p str, Marker)>,
    state: LexState,
}

impl<'p> Lexer<'p> {
    pub(crate) fn new(profile: &'p LanguageProfile) -> Self {
        let mut openers: Vec<(&str, Marker)> = Vec::new();
        openers.extend(profile.line_comment_markers.iter().map(|m| (m.as_str(), Marker::Line)));
        openers.extend(
            profile
                .block_comment_pairs
                .iter()
                .enumerate()
                .map(|(i, (open, _))| (open.as_str(), Marker::Block(i))),
        );
        openers.extend(
            profile
                .string_delimiters
                .iter()
                .enumerate()
                .map(|(i, d)| (d.open.as_str(), Marker::Str(i))),
        );
        // Longest marker wins; on equal length comments beat strings (stable sort).
        openers.sort_by_key(|o| std::cmp::Reverse(o.0.len()));
        Self {
            profile,
            openers,
            state: LexState::Normal,
        }
    }

    pub(crate) fn in_block_comment(&self) -> bool {
        matches!(self.state, LexState::Block { .. })
    }

    /// Splits `line` (no terminator) into spans, updating the carried state.
    pub(crate) fn lex_line(&mut self, line: &str, mut sink: impl FnMut(SpanKind, &str)) {
        let bytes = line.as_bytes();
        let mut i = 0;
        let mut span_start = 0;
        let mut span_kind = self.kind();
        let mut continued = false;

        macro_rules! switch_to {
            ($at:expr, $kind:expr) => {{
                let at = $at;
                if at > span_start {
                    sink(span_kind, &line[span_start..at]);
                }
                span_start = at;
                span_kind = $kind;
            }};
        }

        while i < bytes.len() {
            let rest = &line[i..];
            let step = rest.chars().next().map_or(1, char::len_utf8);
            match self.state {
                LexState::Normal => {
                    let hit = self.openers.iter().find(|(m, _)| rest.starts_with(m)).copied();
                    match hit {
                        Some((_, Marker::Line)) => {
                            switch_to!(i, SpanKind::Comment);
                            i = bytes.len();
                        }
                        Some((m, Marker::Block(pair))) => {
                            switch_to!(i, SpanKind::Comment);
                            self.state = LexState::Block { pair, depth: 1 };
                            i += m.len();
                        }
                        Some((m, Marker::Str(delim))) => {
                            switch_to!(i, SpanKind::Str);
                            self.state = LexState::Str { delim };
                            i += m.len();
                        }
                        None => {
                            if span_kind != SpanKind::Code {
                                switch_to!(i, SpanKind::Code);
                            }
                            i += step;
                        }
                    }
                }
                LexState::Block { pair, depth } => {
                    let (open, close) = &self.profile.block_comment_pairs[pair];
                    if rest.starts_with(close.as_str()) {
                        i += close.len();
                        if depth == 1 {
                            self.state = LexState::Normal;
                            switch_to!(i, SpanKind::Code);
                        } else {
                            self.state = LexState::Block { pair, depth: depth - 1 };
                        }
                    } else if self.profile.nestable_block_comments && rest.starts_with(open.as_str()) {
                        i += open.len();
                        self.state = LexState::Block { pair, depth: depth + 1 };
                    } else {
                        i += step;
                    }
                }
                LexState::Str { delim } => {
                    let d = &self.profile.string_delimiters[delim];
                    if d.escape.is_some_and(|e| rest.starts_with(e)) {
                        i += step;
                        match line[i..].chars().next() {
                            Some(c) => i += c.len_utf8(),
                            None => continued = true,
                        }
                    } else if rest.starts_with(d.close.as_str()) {
                        i += d.close.len();
                        self.state = LexState::Normal;
                        switch_to!(i, SpanKind::Code);
                    } else {
                        i += step;
                    }
                }
            }
        }
        if span_start < bytes.len() {
            sink(span_kind, &line[span_start..]);
        }
        if let LexState::Str { delim } = self.state {
            if !self.profile.string_delimiters[delim].multiline && !continued {
                self.state = LexState::Normal;
            }
        }
    }

    fn kind(&self) -> SpanKind {
        match self.state {
            LexState::Normal => SpanKind::Code,
            LexState::Block { .. } => SpanKind::Comment,
            LexState::Str { .. } => SpanKind::Str,
        }
    }

    pub(crate) fn classify(&mut self, line: &str) -> LineClass {
        let mut has_code = false;
        self.lex_line(line, |kind, text| {
            if kind != SpanKind::Comment && !text.trim().is_empty() {
                has_code = true;
            }
        });
        if line.trim().is_empty() {
            LineClass::Blank
        } else if has_code {
            LineClass::Code
        } else {
            LineClass::CommentOnly
        }
    }
}

/// Classifies every line of `text` (LF or CRLF separated).
pub fn classify_lines(text: &str, profile: &LanguageProfile) -> Vec<LineClass> {
    let mut lexer = Lexer::new(profile);
    text.lines().map(|line| lexer.classify(line)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanedSample {
    pub system_id: String,
    pub language_id: String,
    #[serde(skip)]
    pub cleaned_bytes: Vec<u8>,
    pub loc: u64,
    pub original_bytes_count: u64,
    pub files_included: u64,
    /// Physical lines across all input files.
    pub physical_lines: u64,
    /// Files that were not valid UTF-8 and were decoded with replacement characters.
    pub decode_warnings: u64,
    /// Files ending inside a block comment.
    pub unterminated_comments: u64,
}

#[derive(Debug, Error)]
#[error("cannot read {path}: {source}")]
pub struct CleanError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Accumulates cleaned files in order.
pub struct SampleBuilder<'p> {
    profile: &'p LanguageProfile,
    sample: CleanedSample,
}

impl<'p> SampleBuilder<'p> {
    pub fn new(system_id: &str, profile: &'p LanguageProfile) -> Self {
        Self {
            profile,
            sample: CleanedSample {
                system_id: system_id.to_string(),
                language_id: profile.language_id.clone(),
                cleaned_bytes: Vec::new(),
                loc: 0,
                original_bytes_count: 0,
                files_included: 0,
                physical_lines: 0,
                decode_warnings: 0,
                unterminated_comments: 0,
            },
        }
    }

    pub fn push_file(&mut self, raw: &[u8]) {
        let text = String::from_utf8_lossy(raw);
        if matches!(text, std::borrow::Cow::Owned(_)) {
            self.sample.decode_warnings += 1;
        }
        let mut lexer = Lexer::new(self.profile);
        for line in text.lines() {
            self.sample.physical_lines += 1;
            if lexer.classify(line) == LineClass::Code {
                self.sample.cleaned_bytes.extend_from_slice(line.trim_end().as_bytes());
                self.sample.cleaned_bytes.push(b'\n');
                self.sample.loc += 1;
            }
        }
        if lexer.in_block_comment() {
            self.sample.unterminated_comments += 1;
        }
        self.sample.files_included += 1;
    }

    pub fn finish(mut self) -> CleanedSample {
        self.sample.original_bytes_count = self.sample.cleaned_bytes.len() as u64;
        self.sample
    }
}

/// Cleans in-memory sources, concatenated in iteration order.
pub fn clean_sources<'a>(
    system_id: &str,
    profile: &LanguageProfile,
    sources: impl IntoIterator<Item = &'a [u8]>,
) -> CleanedSample {
    let mut builder = SampleBuilder::new(system_id, profile);
    for src in sources {
        builder.push_file(src);
    }
    builder.finish()
}

/// Reads and cleans `files` in order.
pub fn clean_sample(
    system_id: &str,
    files: &[impl AsRef<Path>],
    profile: &LanguageProfile,
) -> Result<CleanedSample, CleanError> {
    let mut builder = SampleBuilder::new(system_id, profile);
    for path in files {
        let path = path.as_ref();
        let raw = std::fs::read(path).map_err(|source| CleanError {
            path: path.to_path_buf(),
            source,
        })?;
        builder.push_file(&raw);
    }
    Ok(builder.finish())
}

/// Code outside comments, string literals collapsed to `""`, comments replaced by a space.
pub(crate) fn code_only(text: &str, profile: &LanguageProfile) -> String {
    let mut lexer = Lexer::new(profile);
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut in_str = false;
        lexer.lex_line(line, |kind, span| match kind {
            SpanKind::Code => {
                in_str = false;
                out.push_str(span);
            }
            SpanKind::Str => {
                if !in_str {
                    out.push_str(" \"\" ");
                }
                in_str = true;
            }
            SpanKind::Comment => {
                in_str = false;
                out.push(' ');
            }
        });
        out.push('\n');
    }
    out
}
