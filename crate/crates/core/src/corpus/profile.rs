//! Language profiles: how to recognise a language and how to lex its comments and strings.
//!
//! Profiles come from a built-in table, optionally merged with a TOML
//! configuration document:
//!
//! ```toml
//! include_defaults = true          # optional, default true
//!
//! [[language]]
//! id = "python"
//! extensions = [".pyw"]            # added to the built-in python profile
//!
//! [[language]]
//! id = "lua"
//! extensions = [".lua"]
//! line_comments = ["--"]
//! block_comments = [["--[[", "]]"]]
//! nestable_block_comments = false
//! strings = [
//!     { open = "\"", escape = "\\" },
//!     { open = "[[", close = "]]", multiline = true },
//! ]
//! ```
//!
//! A `[[language]]` entry whose `id` matches an existing profile is merged
//! into it: extensions are added, every other field that is present
//! replaces the existing value. Extensions are matched case-insensitively
//! against the end of the file name; a missing leading dot is added.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("malformed profile config: {0}")]
    Parse(String),
    #[error("extension `{extension}` is claimed by both `{first}` and `{second}`")]
    DuplicateExtension {
        extension: String,
        first: String,
        second: String,
    },
    #[error("language `{0}` is defined twice in the config")]
    DuplicateId(String),
    #[error("a language profile has an empty id")]
    EmptyId,
    #[error("language `{0}` has an empty comment or string marker")]
    EmptyMarker(String),
    #[error("language `{0}` is new and needs at least one extension")]
    NoExtensions(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringDelimiter {
    pub open: String,
    pub close: String,
    pub escape: Option<char>,
    /// Whether the literal may continue past the end of a line.
    pub multiline: bool,
}

impl StringDelimiter {
    pub fn new(open: &str, close: &str, escape: Option<char>, multiline: bool) -> Self {
        Self {
            open: open.to_string(),
            close: close.to_string(),
            escape,
            multiline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub language_id: String,
    pub extensions: Vec<String>,
    pub line_comment_markers: Vec<String>,
    pub block_comment_pairs: Vec<(String, String)>,
    pub string_delimiters: Vec<StringDelimiter>,
    pub nestable_block_comments: bool,
}

impl LanguageProfile {
    fn validate(&self) -> Result<(), ProfileError> {
        if self.language_id.trim().is_empty() {
            return Err(ProfileError::EmptyId);
        }
        let empty = self.line_comment_markers.iter().any(String::is_empty)
            || self
                .block_comment_pairs
                .iter()
                .any(|(o, c)| o.is_empty() || c.is_empty())
            || self
                .string_delimiters
                .iter()
                .any(|d| d.open.is_empty() || d.close.is_empty())
            || self.extensions.iter().any(|e| e.len() < 2);
        if empty {
            return Err(ProfileError::EmptyMarker(self.language_id.clone()));
        }
        Ok(())
    }
}

/// A validated set of profiles with suffix lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSet {
    profiles: Vec<LanguageProfile>,
    /// (suffix, profile index), longest suffix first.
    suffixes: Vec<(String, usize)>,
}

impl ProfileSet {
    pub fn new(mut profiles: Vec<LanguageProfile>) -> Result<Self, ProfileError> {
        profiles.sort_by(|a, b| a.language_id.cmp(&b.language_id));
        let mut owner: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, p) in profiles.iter().enumerate() {
            p.validate()?;
            if idx > 0 && profiles[idx - 1].language_id == p.language_id {
                return Err(ProfileError::DuplicateId(p.language_id.clone()));
            }
            for ext in &p.extensions {
                if let Some(&first) = owner.get(ext) {
                    if first != idx {
                        return Err(ProfileError::DuplicateExtension {
                            extension: ext.clone(),
                            first: profiles[first].language_id.clone(),
                            second: p.language_id.clone(),
                        });
                    }
                }
                owner.insert(ext.clone(), idx);
            }
        }
        let mut suffixes: Vec<(String, usize)> = owner.into_iter().collect();
        suffixes.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { profiles, suffixes })
    }

    pub fn defaults() -> Self {
        Self::new(default_profiles()).expect("built-in profiles are consistent")
    }

    pub fn profiles(&self) -> &[LanguageProfile] {
        &self.profiles
    }

    pub fn get(&self, language_id: &str) -> Option<&LanguageProfile> {
        self.profiles
            .binary_search_by(|p| p.language_id.as_str().cmp(language_id))
            .ok()
            .map(|i| &self.profiles[i])
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Language of `path` by its longest registered suffix, or `None` when unknown.
    pub fn detect(&self, path: &Path) -> Option<&str> {
        let name = path.file_name()?.to_string_lossy().to_lowercase();
        self.suffixes
            .iter()
            .find(|(suffix, _)| name.ends_with(suffix.as_str()))
            .map(|(_, idx)| self.profiles[*idx].language_id.as_str())
    }
}

pub fn detect_language<'a>(path: &Path, profiles: &'a ProfileSet) -> Option<&'a str> {
    profiles.detect(path)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(default = "yes")]
    include_defaults: bool,
    #[serde(default)]
    language: Vec<ConfigLanguage>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigLanguage {
    id: String,
    #[serde(default)]
    extensions: Vec<String>,
    line_comments: Option<Vec<String>>,
    block_comments: Option<Vec<(String, String)>>,
    strings: Option<Vec<ConfigString>>,
    nestable_block_comments: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigString {
    open: String,
    close: Option<String>,
    escape: Option<char>,
    multiline: Option<bool>,
}

impl From<ConfigString> for StringDelimiter {
    fn from(c: ConfigString) -> Self {
        let multiline = c.multiline.unwrap_or(c.open.chars().count() > 1);
        let close = c.close.unwrap_or_else(|| c.open.clone());
        StringDelimiter {
            open: c.open,
            close,
            escape: c.escape,
            multiline,
        }
    }
}

fn normalize_extension(ext: &str) -> String {
    let ext = ext.trim().to_lowercase();
    if !ext.chars().all(|c| c.is_ascii_alphanumeric()) {
        ext
    } else {
        format!(".{ext}")
    }
}

/// Loads profiles from an optional TOML document; `None` or blank text yields the built-ins.
pub fn load_language_profiles(config_source: Option<&str>) -> Result<ProfileSet, ProfileError> {
    let Some(text) = config_source.filter(|t| !t.trim().is_empty()) else {
        return Ok(ProfileSet::defaults());
    };
    let doc: ConfigDoc = toml::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;

    let mut profiles: Vec<LanguageProfile> = if doc.include_defaults {
        default_profiles()
    } else {
        Vec::new()
    };
    let mut seen = Vec::new();
    for entry in doc.language {
        let id = entry.id.trim().to_lowercase();
        if id.is_empty() {
            return Err(ProfileError::EmptyId);
        }
        if seen.contains(&id) {
            return Err(ProfileError::DuplicateId(id));
        }
        seen.push(id.clone());

        let exts: Vec<String> = entry.extensions.iter().map(|e| normalize_extension(e)).collect();
        let target = match profiles.iter_mut().position(|p| p.language_id == id) {
            Some(i) => &mut profiles[i],
            None => {
                if exts.is_empty() {
                    return Err(ProfileError::NoExtensions(id));
                }
                profiles.push(LanguageProfile {
                    language_id: id.clone(),
                    extensions: Vec::new(),
                    line_comment_markers: Vec::new(),
                    block_comment_pairs: Vec::new(),
                    string_delimiters: Vec::new(),
                    nestable_block_comments: false,
                });
                profiles.last_mut().unwrap()
            }
        };
        for ext in exts {
            if !target.extensions.contains(&ext) {
                target.extensions.push(ext);
            }
        }
        target.extensions.sort();
        if let Some(v) = entry.line_comments {
            target.line_comment_markers = v;
        }
        if let Some(v) = entry.block_comments {
            target.block_comment_pairs = v;
        }
        if let Some(v) = entry.strings {
            target.string_delimiters = v.into_iter().map(Into::into).collect();
        }
        if let Some(v) = entry.nestable_block_comments {
            target.nestable_block_comments = v;
        }
    }
    ProfileSet::new(profiles)
}

fn profile(
    id: &str,
    extensions: &[&str],
    line: &[&str],
    block: &[(&str, &str)],
    strings: Vec<StringDelimiter>,
    nestable: bool,
) -> LanguageProfile {
    let mut extensions: Vec<String> = extensions.iter().map(|e| normalize_extension(e)).collect();
    extensions.sort();
    LanguageProfile {
        language_id: id.to_string(),
        extensions,
        line_comment_markers: line.iter().map(|s| s.to_string()).collect(),
        block_comment_pairs: block.iter().map(|(o, c)| (o.to_string(), c.to_string())).collect(),
        string_delimiters: strings,
        nestable_block_comments: nestable,
    }
}

fn s(open: &str, close: &str, escape: Option<char>, multiline: bool) -> StringDelimiter {
    StringDelimiter::new(open, close, escape, multiline)
}

fn c_like_strings() -> Vec<StringDelimiter> {
    vec![s("\"", "\"", Some('\\'), false), s("'", "'", Some('\\'), false)]
}

/// The built-in profile table.
pub fn default_profiles() -> Vec<LanguageProfile> {
    const C_BLOCK: &[(&str, &str)] = &[("/*", "*/")];
    let js_strings = || {
        vec![
            s("\"", "\"", Some('\\'), false),
            s("'", "'", Some('\\'), false),
            s("`", "`", Some('\\'), true),
        ]
    };
    vec![
        profile("c", &[".c", ".h"], &["//"], C_BLOCK, c_like_strings(), false),
        profile(
            "cpp",
            &[
                ".cpp", ".cc", ".cxx", ".c++", ".hpp", ".hh", ".hxx", ".h++", ".ipp", ".inl", ".tcc",
            ],
            &["//"],
            C_BLOCK,
            {
                let mut v = vec![s("R\"(", ")\"", None, true)];
                v.extend(c_like_strings());
                v
            },
            false,
        ),
        profile(
            "csharp",
            &[".cs"],
            &["//"],
            C_BLOCK,
            vec![
                s("\"\"\"", "\"\"\"", None, true),
                s("@\"", "\"", None, true),
                s("\"", "\"", Some('\\'), false),
                s("'", "'", Some('\\'), false),
            ],
            false,
        ),
        profile(
            "go",
            &[".go"],
            &["//"],
            C_BLOCK,
            vec![
                s("\"", "\"", Some('\\'), false),
                s("'", "'", Some('\\'), false),
                s("`", "`", None, true),
            ],
            false,
        ),
        profile(
            "java",
            &[".java"],
            &["//"],
            C_BLOCK,
            {
                let mut v = vec![s("\"\"\"", "\"\"\"", Some('\\'), true)];
                v.extend(c_like_strings());
                v
            },
            false,
        ),
        profile(
            "javascript",
            &[".js", ".mjs", ".cjs", ".jsx"],
            &["//"],
            C_BLOCK,
            js_strings(),
            false,
        ),
        profile(
            "kotlin",
            &[".kt", ".kts"],
            &["//"],
            C_BLOCK,
            {
                let mut v = vec![s("\"\"\"", "\"\"\"", None, true)];
                v.extend(c_like_strings());
                v
            },
            true,
        ),
        profile(
            "php",
            &[".php", ".phtml", ".php5", ".php7"],
            &["//", "#"],
            C_BLOCK,
            vec![s("\"", "\"", Some('\\'), true), s("'", "'", Some('\\'), true)],
            false,
        ),
        profile(
            "python",
            &[".py", ".pyi"],
            &["#"],
            &[],
            vec![
                s("\"\"\"", "\"\"\"", Some('\\'), true),
                s("'''", "'''", Some('\\'), true),
                s("\"", "\"", Some('\\'), false),
                s("'", "'", Some('\\'), false),
            ],
            false,
        ),
        profile(
            "ruby",
            &[".rb", ".rake", ".gemspec"],
            &["#"],
            &[("=begin", "=end")],
            vec![s("\"", "\"", Some('\\'), true), s("'", "'", Some('\\'), true)],
            false,
        ),
        profile(
            "rust",
            &[".rs"],
            &["//"],
            C_BLOCK,
            vec![
                s("r#\"", "\"#", None, true),
                s("\"", "\"", Some('\\'), true),
                s("'", "'", Some('\\'), false),
            ],
            true,
        ),
        profile(
            "shell",
            &[".sh", ".bash", ".zsh", ".ksh"],
            &["#"],
            &[],
            vec![s("\"", "\"", Some('\\'), true), s("'", "'", None, true)],
            false,
        ),
        profile(
            "sql",
            &[".sql"],
            &["--"],
            C_BLOCK,
            vec![s("'", "'", None, false), s("\"", "\"", None, false)],
            false,
        ),
        profile(
            "swift",
            &[".swift"],
            &["//"],
            C_BLOCK,
            vec![
                s("\"\"\"", "\"\"\"", Some('\\'), true),
                s("\"", "\"", Some('\\'), false),
            ],
            true,
        ),
        profile(
            "typescript",
            &[".ts", ".tsx", ".mts", ".cts", ".d.ts"],
            &["//"],
            C_BLOCK,
            js_strings(),
            false,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let set = load_language_profiles(None).unwrap();
        assert!(set.len() >= 15);
        assert_eq!(load_language_profiles(Some("  \n")).unwrap(), set);
        for id in [
            "java",
            "csharp",
            "python",
            "javascript",
            "shell",
            "c",
            "cpp",
            "go",
            "ruby",
            "php",
            "sql",
            "typescript",
            "kotlin",
            "swift",
            "rust",
        ] {
            assert!(set.get(id).is_some(), "missing {id}");
        }
    }

    #[test]
    fn override_merges_extensions() {
        let set = load_language_profiles(Some("[[language]]\nid = \"python\"\nextensions = [\".pyw\"]\n")).unwrap();
        assert_eq!(set.detect(Path::new("tool.pyw")), Some("python"));
        assert_eq!(set.detect(Path::new("tool.py")), Some("python"));
        assert_eq!(set.get("python").unwrap().line_comment_markers, vec!["#"]);
    }

    #[test]
    fn duplicate_extension_names_both_languages() {
        let err = load_language_profiles(Some("[[language]]\nid = \"objc\"\nextensions = [\"h\"]\n")).unwrap_err();
        assert_eq!(
            err,
            ProfileError::DuplicateExtension {
                extension: ".h".into(),
                first: "c".into(),
                second: "objc".into(),
            }
        );
        let msg = err.to_string();
        assert!(msg.contains("`c`") && msg.contains("`objc`"));
    }

    #[test]
    fn malformed_config_reports_location() {
        let err = load_language_profiles(Some("[[language]]\nid = \n")).unwrap_err();
        match err {
            ProfileError::Parse(msg) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_block_marker_is_rejected() {
        let err = load_language_profiles(Some(
            "[[language]]\nid = \"x\"\nextensions = [\".x\"]\nblock_comments = [[\"\", \"*/\"]]\n",
        ))
        .unwrap_err();
        assert_eq!(err, ProfileError::EmptyMarker("x".into()));
    }

    #[test]
    fn new_language_with_string_table() {
        let set = load_language_profiles(Some(
            r#"
include_defaults = false
[[language]]
id = "lua"
extensions = ["LUA"]
line_comments = ["--"]
strings = [{ open = "\"", escape = "\\" }, { open = "[[", close = "]]" }]
"#,
        ))
        .unwrap();
        assert_eq!(set.len(), 1);
        let lua = set.get("lua").unwrap();
        assert_eq!(lua.extensions, vec![".lua"]);
        assert_eq!(lua.string_delimiters[0].close, "\"");
        assert!(!lua.string_delimiters[0].multiline);
        assert!(lua.string_delimiters[1].multiline);
        assert_eq!(set.detect(Path::new("a/B.Lua")), Some("lua"));
    }

    #[test]
    fn detection_by_longest_suffix() {
        let set = ProfileSet::defaults();
        assert_eq!(detect_language(Path::new("src/Main.java"), &set), Some("java"));
        assert_eq!(detect_language(Path::new("Makefile"), &set), None);
        assert_eq!(detect_language(Path::new("a.D.TS"), &set), Some("typescript"));
        assert_eq!(detect_language(Path::new("x.H"), &set), Some("c"));
        assert_eq!(detect_language(Path::new("archive.tar.gz"), &set), None);
    }

    #[test]
    fn longest_suffix_beats_shorter_owner() {
        let set = load_language_profiles(Some(
            "[[language]]\nid = \"tsdecl\"\nextensions = [\".d.ts\"]\n\n[[language]]\nid = \"typescript\"\nextensions = []\n",
        ));
        // .d.ts already belongs to typescript
        assert!(set.is_err());
        let set = load_language_profiles(Some("[[language]]\nid = \"pytest\"\nextensions = [\"_test.py\"]\n")).unwrap();
        assert_eq!(set.detect(Path::new("foo_test.py")), Some("pytest"));
        assert_eq!(set.detect(Path::new("foo.py")), Some("python"));
    }
}
