//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use conciseness::benchmark::{BenchmarkDb, ConcisenessFactor, Thresholds, SCHEMA_VERSION};
use conciseness::cleaner::{classify_lines, LineClass};
use conciseness::compressor::CompressionMeasurement;
use conciseness::corpus::ProfileSet;
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

/// Weighted median straight from the definition: try every CR as the cut
/// point and keep the smallest one whose lower side holds half the LOC.
pub fn brute_weighted_median(samples: &[(f64, u64)]) -> Option<f64> {
    let total: u128 = samples.iter().map(|s| s.1 as u128).sum();
    if total == 0 {
        return None;
    }
    samples
        .iter()
        .map(|s| s.0)
        .filter(|&c| {
            let below: u128 = samples.iter().filter(|s| s.0 <= c).map(|s| s.1 as u128).sum();
            2 * below >= total
        })
        .min_by(f64::total_cmp)
}

/// Average rank by counting: 1 + (strictly smaller) + (ties - 1) / 2.
pub fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman rho from rank sums; the mean rank is always (n + 1) / 2.
pub fn brute_spearman(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let r = brute_ranks(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let s = brute_ranks(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let m = (n + 1.0) / 2.0;
    let srs: f64 = r.iter().zip(&s).map(|(a, b)| a * b).sum();
    let srr: f64 = r.iter().map(|a| a * a).sum();
    let sss: f64 = s.iter().map(|b| b * b).sum();
    let den = ((srr - n * m * m) * (sss - n * m * m)).sqrt();
    if den == 0.0 {
        return None;
    }
    Some((srs - n * m * m) / den)
}

/// A database holding exactly the given characteristic ratios.
pub fn db_with(factors: &[(&str, f64)]) -> BenchmarkDb {
    let thresholds = Thresholds::default();
    BenchmarkDb {
        schema_version: SCHEMA_VERSION,
        created_at: None,
        compressor_name: "builtin-lz".into(),
        thresholds,
        factors: factors
            .iter()
            .map(|&(l, cr)| {
                (
                    l.to_string(),
                    ConcisenessFactor {
                        language_id: l.to_string(),
                        cr_characteristic: cr,
                        sample_count: thresholds.min_systems,
                        total_loc: 1,
                        cr_p25: cr,
                        cr_p75: cr,
                        min_sample_bytes: thresholds.min_sample_bytes,
                        min_systems: thresholds.min_systems,
                    },
                )
            })
            .collect(),
        insufficient_data: Vec::new(),
        provenance: Vec::new(),
    }
}

pub const LANGS: &[&str] = &["c", "java", "python", "ruby", "go", "rust"];

/// Random measurement set: several languages, some tiny samples, tied CRs and zero LOC.
pub fn random_measurements(rng: &mut impl Rng) -> Vec<CompressionMeasurement> {
    let n = rng.random_range(1..40);
    (0..n)
        .map(|i| {
            let lang = *LANGS.choose(rng).unwrap();
            let bytes = if rng.random_bool(0.2) {
                rng.random_range(1..100_000)
            } else {
                rng.random_range(100_000..5_000_000)
            };
            // Coarse CR grid so ties are common.
            let cr = 2.0 + rng.random_range(0..40) as f64 * 0.125;
            let compressed = ((bytes as f64 / cr).round() as u64).max(1);
            let mut m = CompressionMeasurement::new(format!("sys{i:03}"), lang, bytes, compressed, 0, "builtin-lz");
            m.compression_ratio = cr;
            m.loc = if rng.random_bool(0.05) {
                0
            } else {
                rng.random_range(1..200_000)
            };
            m
        })
        .collect()
}

/// Source text without comments or string literals, with blank lines,
/// trailing whitespace and CRLF terminators mixed in.
pub fn comment_free_source(rng: &mut impl RngCore) -> String {
    const WORDS: &[&str] = &[
        "x", "y1", "count", "=", "+", "(", ")", "{", "}", "[", "]", ";", ",", "return", "if", "0", "42", "<", ">",
        "&&", "fn", "let", ".", ":",
    ];
    let lines = rng.random_range(0..60);
    let mut out = String::new();
    for _ in 0..lines {
        match rng.random_range(0..10) {
            0 => {}
            1 => out.push_str("   \t"),
            _ => {
                out.push_str(&" ".repeat(rng.random_range(0..8)));
                for k in 0..rng.random_range(1..10) {
                    if k > 0 {
                        out.push(' ');
                    }
                    out.push_str(WORDS.choose(rng).unwrap());
                }
                if rng.random_bool(0.2) {
                    out.push_str("  ");
                }
            }
        }
        out.push_str(if rng.random_bool(0.2) { "\r\n" } else { "\n" });
    }
    out
}

/// Map of language to LOC.
pub fn locs(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|&(l, n)| (l.to_string(), n)).collect()
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn letter(class: LineClass) -> char {
    match class {
        LineClass::Code => 'C',
        LineClass::CommentOnly => 'M',
        LineClass::Blank => 'B',
    }
}

/// (language, case, lines checked, mismatch descriptions)
pub fn run_golden() -> Vec<(String, String, usize, Vec<String>)> {
    let profiles = ProfileSet::defaults();
    let mut results = Vec::new();
    let mut langs: Vec<_> = fs::read_dir(golden_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    langs.sort();
    for lang_dir in langs {
        let lang = lang_dir.file_name().unwrap().to_string_lossy().into_owned();
        let profile = profiles
            .get(&lang)
            .unwrap_or_else(|| panic!("no profile for golden dir {lang}"));
        let mut inputs: Vec<_> = fs::read_dir(&lang_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "input"))
            .collect();
        inputs.sort();
        for input in inputs {
            let text = fs::read_to_string(&input).unwrap();
            let expected: Vec<char> = fs::read_to_string(input.with_extension("expected"))
                .unwrap()
                .lines()
                .map(|l| l.trim().chars().next().unwrap_or('?'))
                .collect();
            let got: Vec<char> = classify_lines(&text, profile).into_iter().map(letter).collect();
            let mut mismatches = Vec::new();
            if got.len() != expected.len() {
                mismatches.push(format!("{} lines classified, {} expected", got.len(), expected.len()));
            }
            for (i, ((g, e), line)) in got.iter().zip(&expected).zip(text.lines()).enumerate() {
                if g != e {
                    mismatches.push(format!("line {}: got {g}, expected {e}: {line:?}", i + 1));
                }
            }
            let name = input.file_stem().unwrap().to_string_lossy().into_owned();
            results.push((lang.clone(), name, expected.len(), mismatches));
        }
    }
    results
}

/// Languages of the generated fixture corpus, with file extensions.
pub const FIXTURE_LANGS: &[(&str, &str)] = &[
    ("java", "java"),
    ("csharp", "cs"),
    ("python", "py"),
    ("javascript", "js"),
    ("shell", "sh"),
];

fn ident(rng: &mut impl Rng) -> String {
    const PARTS: &[&str] = &[
        "user", "order", "item", "count", "total", "name", "node", "tree", "parse", "token", "rule", "value", "list",
        "map", "index", "buffer", "state", "error", "result", "cache",
    ];
    let mut s = PARTS.choose(rng).unwrap().to_string();
    for _ in 0..rng.random_range(0..3) {
        let p = PARTS.choose(rng).unwrap();
        s.push_str(&p[..1].to_uppercase());
        s.push_str(&p[1..]);
    }
    s
}

/// One generated source file of roughly `functions` definitions.
pub fn fixture_source(language: &str, functions: usize, rng: &mut impl Rng) -> String {
    let mut out = String::new();
    match language {
        "java" | "csharp" => {
            let (kw, str_t) = if language == "java" {
                ("public", "String")
            } else {
                ("public", "string")
            };
            out.push_str(&format!(
                "/* Generated {language} fixture. */\n{kw} class {} {{\n",
                ident(rng)
            ));
            for _ in 0..functions {
                let (f, a, b) = (ident(rng), ident(rng), ident(rng));
                out.push_str(&format!(
                    "\n    // {f}\n    {kw} static int {f}(int {a}, {str_t} {b}) {{\n        if ({a} > {}) {{\n            return {a} * {};\n        }}\n        for (int i = 0; i < {b}.length(); i++) {{\n            {a} += i;\n        }}\n        return {a};\n    }}\n",
                    rng.random_range(0..100),
                    rng.random_range(2..9)
                ));
            }
            out.push_str("}\n");
        }
        "python" => {
            out.push_str("# Generated python fixture.\n\n");
            for _ in 0..functions {
                let (f, a, b) = (ident(rng), ident(rng), ident(rng));
                out.push_str(&format!(
                    "def {f}({a}, {b}):\n    \"\"\"{f} docs.\"\"\"\n    if {a} > {}:\n        return {a} * {}\n    return sum(len(x) for x in {b}) + {a}\n\n\n",
                    rng.random_range(0..100),
                    rng.random_range(2..9)
                ));
            }
        }
        "javascript" => {
            out.push_str("// Generated javascript fixture.\n'use strict';\n");
            for _ in 0..functions {
                let (f, a, b) = (ident(rng), ident(rng), ident(rng));
                out.push_str(&format!(
                    "\nfunction {f}({a}, {b}) {{\n  if ({a} > {}) {{\n    return {a} * {};\n  }}\n  return {b}.reduce((acc, x) => acc + x.length, {a});\n}}\n",
                    rng.random_range(0..100),
                    rng.random_range(2..9)
                ));
            }
        }
        "shell" => {
            out.push_str("#!/bin/sh\n# Generated shell fixture.\nset -eu\n");
            for _ in 0..functions {
                let (f, a) = (ident(rng), ident(rng));
                out.push_str(&format!(
                    "\n{f}() {{\n  {a}=\"$1\"\n  if [ \"${a}\" -gt {} ]; then\n    echo \"${a}\"\n  fi\n}}\n",
                    rng.random_range(0..100)
                ));
            }
        }
        other => panic!("no fixture generator for {other}"),
    }
    out
}

/// Writes `systems` child directories under `root`, each with a few files per fixture language.
pub fn write_fixture_corpus(root: &Path, systems: usize, seed: u64) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for s in 0..systems {
        let dir = root.join(format!("system{s:02}"));
        for &(lang, ext) in FIXTURE_LANGS {
            let sub = dir.join(lang);
            fs::create_dir_all(&sub).unwrap();
            for f in 0..3 {
                let n = rng.random_range(20..60);
                fs::write(sub.join(format!("file{f}.{ext}")), fixture_source(lang, n, &mut rng)).unwrap();
            }
        }
        fs::write(dir.join("README.txt"), "not source\n").unwrap();
    }
}
