//! Invariants as properties.

mod common;

use std::collections::BTreeMap;

use common::*;
use conciseness::benchmark::{aggregate, weighted_median, Thresholds};
use conciseness::cleaner::clean_sources;
use conciseness::compressor::{decode, encode, HEADER_LEN};
use conciseness::corpus::ProfileSet;
use conciseness::metrics::{mccabe_report, volume_breakdown, FallbackPolicy, LanguageSize, McCabeCount};
use conciseness::validation::spearman;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bytes with long-range structure: chunks copied from earlier output, mutated.
fn structured(seed: u64, len: usize) -> Vec<u8> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        if out.len() > 8 && rng.random_bool(0.6) {
            let from = rng.random_range(0..out.len());
            let n = rng.random_range(1..300).min(out.len() - from);
            for i in 0..n {
                let b = out[from + i];
                out.push(if rng.random_bool(0.02) { b ^ 1 } else { b });
            }
        } else {
            out.push(b"abcdefgh (){};=\n"[rng.random_range(0..16)]);
        }
    }
    out.truncate(len);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codec_round_trip_random(data in proptest::collection::vec(any::<u8>(), 0..20_000)) {
        prop_assert_eq!(decode(&encode(&data)).unwrap(), data);
    }

    #[test]
    fn codec_round_trip_structured(seed in any::<u64>(), len in 0usize..60_000) {
        let data = structured(seed, len);
        prop_assert_eq!(decode(&encode(&data)).unwrap(), data);
    }

    #[test]
    fn overhead_bound(data in proptest::collection::vec(any::<u8>(), 0..20_000)) {
        let n = data.len();
        prop_assert!(encode(&data).len() <= n + HEADER_LEN + n.div_ceil(64));
    }

    #[test]
    fn superadditive(a in 0u64..1000, b in 0u64..1000, la in 1usize..20_000, lb in 1usize..20_000) {
        let x = structured(a, la);
        let y = structured(b, lb);
        let xy = [x.as_slice(), y.as_slice()].concat();
        prop_assert!(encode(&xy).len() <= encode(&x).len() + encode(&y).len() + 1024);
    }

    #[test]
    fn cleaning_is_idempotent(seed in any::<u64>(), lang in prop::sample::select(vec!["java", "c", "python", "go", "rust", "shell", "sql"])) {
        let profiles = ProfileSet::defaults();
        let profile = profiles.get(lang).unwrap();
        let src = comment_free_source(&mut ChaCha8Rng::seed_from_u64(seed));
        let once = clean_sources("s", profile, [src.as_bytes()]);
        let twice = clean_sources("s", profile, [once.cleaned_bytes.as_slice()]);
        prop_assert_eq!(&twice.cleaned_bytes, &once.cleaned_bytes);
        prop_assert_eq!(twice.loc, once.loc);
        prop_assert_eq!(once.loc as usize, once.cleaned_bytes.iter().filter(|&&b| b == b'\n').count());
    }

    #[test]
    fn comment_and_blank_lines_do_not_change_output(seed in any::<u64>(), at in any::<prop::sample::Index>(), extra in prop::sample::select(vec!["", "   ", "// note", "  /* block */  ", "/* a */ // b"])) {
        let profiles = ProfileSet::defaults();
        let profile = profiles.get("java").unwrap();
        let src = comment_free_source(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut lines: Vec<&str> = src.lines().collect();
        lines.insert(at.index(lines.len() + 1), extra);
        let with_extra = lines.join("\n");
        prop_assert_eq!(
            clean_sources("s", profile, [with_extra.as_bytes()]).cleaned_bytes,
            clean_sources("s", profile, [src.as_bytes()]).cleaned_bytes
        );
    }

    #[test]
    fn loc_is_additive(a in any::<u64>(), b in any::<u64>()) {
        let profiles = ProfileSet::defaults();
        let profile = profiles.get("c").unwrap();
        let x = comment_free_source(&mut ChaCha8Rng::seed_from_u64(a));
        let y = comment_free_source(&mut ChaCha8Rng::seed_from_u64(b));
        let both = clean_sources("s", profile, [x.as_bytes(), y.as_bytes()]);
        let loc = |t: &str| clean_sources("s", profile, [t.as_bytes()]).loc;
        prop_assert_eq!(both.loc, loc(&x) + loc(&y));
        prop_assert_eq!(both.files_included, 2);
    }

    #[test]
    fn weighted_median_matches_definition(samples in proptest::collection::vec((0u32..30, 0u64..1000), 0..25)) {
        let samples: Vec<(f64, u64)> = samples.into_iter().map(|(c, w)| (1.0 + c as f64 / 4.0, w)).collect();
        prop_assert_eq!(weighted_median(&samples), brute_weighted_median(&samples));
    }

    #[test]
    fn aggregate_is_permutation_and_duplication_invariant(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ms = random_measurements(&mut rng);
        let t = Thresholds { min_sample_bytes: 100_000, min_systems: 2 };
        let base = aggregate(&ms, t).unwrap();

        let mut shuffled = ms.clone();
        shuffled.shuffle(&mut rng);
        prop_assert_eq!(&aggregate(&shuffled, t).unwrap(), &base);

        let mut doubled = ms.clone();
        doubled.extend(ms.iter().cloned().map(|mut m| { m.system_id.push_str("-copy"); m }));
        let t2 = Thresholds { min_systems: 1, ..t };
        let (single, twice) = (aggregate(&ms, t2).unwrap(), aggregate(&doubled, t2).unwrap());
        prop_assert_eq!(single.factors.len(), twice.factors.len());
        for (lang, f) in &single.factors {
            let g = &twice.factors[lang];
            prop_assert_eq!(g.cr_characteristic, f.cr_characteristic);
            prop_assert_eq!(g.sample_count, 2 * f.sample_count);
        }
        for f in base.factors.values() {
            let crs: Vec<f64> = base.provenance.iter().filter(|p| p.language_id == f.language_id).map(|p| p.cr).collect();
            prop_assert!(crs.iter().any(|&c| c <= f.cr_characteristic));
            prop_assert!(crs.iter().any(|&c| c >= f.cr_characteristic));
        }
    }

    #[test]
    fn spearman_symmetric_and_rank_based(xs in proptest::collection::vec((0u8..8, 0u8..8), 3..12)) {
        let pairs: Vec<(f64, f64)> = xs.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
        let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let warped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| ((a * 0.7).exp(), b * b * b - 5.0)).collect();
        match (spearman(&pairs), brute_spearman(&pairs)) {
            (Ok(rho), Some(oracle)) => {
                prop_assert!((rho - oracle).abs() <= 1e-12);
                prop_assert!((spearman(&swapped).unwrap() - rho).abs() <= 1e-12);
                prop_assert!((spearman(&warped).unwrap() - rho).abs() <= 1e-12);
            }
            (Err(_), None) => {}
            (got, oracle) => prop_assert!(false, "{got:?} vs {oracle:?}"),
        }
    }

    #[test]
    fn shares_ignore_common_factor(
        crs in proptest::collection::vec(1.0f64..12.0, 1..6),
        loc in proptest::collection::vec(1u64..1_000_000, 6),
        k in 0.05f64..20.0,
    ) {
        let names: Vec<String> = (0..crs.len()).map(|i| format!("l{i}")).collect();
        let factors: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(crs.iter().copied()).collect();
        let scaled: Vec<(&str, f64)> = factors.iter().map(|&(l, c)| (l, c * k)).collect();
        let locs: BTreeMap<String, u64> = names.iter().cloned().zip(loc.iter().copied()).collect();
        let a = volume_breakdown("s", &locs, &db_with(&factors), FallbackPolicy::Error).unwrap();
        let b = volume_breakdown("s", &locs, &db_with(&scaled), FallbackPolicy::Error).unwrap();
        for (x, y) in a.languages.iter().zip(&b.languages) {
            prop_assert!((x.weighted_share - y.weighted_share).abs() <= 1e-9);
        }

        let sizes: BTreeMap<String, LanguageSize> = locs.iter().enumerate()
            .map(|(i, (l, &n))| (l.clone(), LanguageSize { loc: n, mccabe: McCabeCount { decisions: 10 * i as u64 + 3, functions: 7 } }))
            .collect();
        let a = mccabe_report("s", &sizes, &db_with(&factors), FallbackPolicy::Error).unwrap();
        let b = mccabe_report("s", &sizes, &db_with(&scaled), FallbackPolicy::Error).unwrap();
        for (x, y) in a.languages.iter().zip(&b.languages) {
            prop_assert!((x.normalized_weighted - y.normalized_weighted).abs() <= 1e-9);
        }
        let mean = |f: fn(&conciseness::metrics::LanguageMcCabe) -> f64| a.languages.iter().map(f).sum::<f64>() / a.languages.len() as f64;
        prop_assert!((mean(|r| r.normalized_raw) - 100.0).abs() <= 1e-6);
        prop_assert!((mean(|r| r.normalized_weighted) - 100.0).abs() <= 1e-6);
    }

    #[test]
    fn lower_cr_raises_weighted_share(crs in proptest::collection::vec(1.5f64..12.0, 2..6), cut in 0.01f64..0.9) {
        let names: Vec<String> = (0..crs.len()).map(|i| format!("l{i}")).collect();
        let mut factors: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(crs.iter().copied()).collect();
        let locs: BTreeMap<String, u64> = names.iter().map(|n| (n.clone(), 1000)).collect();
        let before = volume_breakdown("s", &locs, &db_with(&factors), FallbackPolicy::Error).unwrap();
        factors[0].1 *= 1.0 - cut;
        let after = volume_breakdown("s", &locs, &db_with(&factors), FallbackPolicy::Error).unwrap();
        prop_assert!(after.languages[0].weighted_share > before.languages[0].weighted_share);
    }
}

#[test]
fn scan_is_deterministic_and_total() {
    use conciseness::corpus::{scan_corpus, ScanOptions};
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("alpha");
    std::fs::create_dir_all(sys.join("src/nested")).unwrap();
    std::fs::write(sys.join("src/a.java"), "class A {}\n").unwrap();
    std::fs::write(sys.join("src/nested/b.py"), "x = 1\n").unwrap();
    std::fs::write(sys.join("README"), "text\n").unwrap();
    std::fs::write(sys.join("blob.c"), b"\0\x01binary").unwrap();
    let profiles = ProfileSet::defaults();
    let opts = ScanOptions::default();
    let m1 = scan_corpus(&[dir.path().to_path_buf()], &profiles, &opts).unwrap();
    let m2 = scan_corpus(&[dir.path().to_path_buf()], &profiles, &opts).unwrap();
    assert_eq!(m1, m2);
    let assigned: usize = m1.systems.iter().map(|s| s.file_count()).sum();
    assert_eq!(assigned + m1.skipped.len(), 4);
}
