//! The `conciseness` binary: pipeline, output files and exit codes.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{write_fixture_corpus, FIXTURE_LANGS};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conciseness"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Builds corpus, measurements and benchmark in `dir`; returns the db path.
fn benchmark(dir: &Path) -> std::path::PathBuf {
    let corpus = dir.join("corpus");
    write_fixture_corpus(&corpus, 5, 7);
    let m = dir.join("m.json");
    let db = dir.join("db.json");
    ok(&["--reproducible", "measure", p(&corpus), "-o", p(&m)]);
    ok(&[
        "--reproducible",
        "benchmark",
        p(&m),
        "--min-sample-bytes",
        "2000",
        "--min-systems",
        "5",
        "-o",
        p(&db),
    ]);
    db
}

#[test]
fn weigh_reports_all_five_languages() {
    let tmp = tempfile::tempdir().unwrap();
    let db = benchmark(tmp.path());
    let target = tmp.path().join("target-system");
    write_fixture_corpus(&target, 1, 99);
    let out = tmp.path().join("weigh");
    ok(&[
        "weigh",
        p(&target.join("system00")),
        "--benchmark",
        p(&db),
        "-o",
        p(&out),
    ]);

    let volume: serde_json::Value = serde_json::from_slice(&fs::read(out.join("volume.json")).unwrap()).unwrap();
    let langs: Vec<&str> = volume["languages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["language_id"].as_str().unwrap())
        .collect();
    let mut expected: Vec<&str> = FIXTURE_LANGS.iter().map(|l| l.0).collect();
    expected.sort();
    assert_eq!(langs, expected);
    let share_sum: f64 = volume["languages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["weighted_share"].as_f64().unwrap())
        .sum();
    assert!((share_sum - 1.0).abs() < 1e-12);

    let mccabe: serde_json::Value = serde_json::from_slice(&fs::read(out.join("mccabe.json")).unwrap()).unwrap();
    assert!(mccabe["method"].as_str().unwrap().contains("estimate"));
    assert_eq!(mccabe["languages"].as_array().unwrap().len(), 5);
    let plot = fs::read_to_string(out.join("volume_plot.csv")).unwrap();
    assert!(plot.starts_with("language,basic,weighted\n"));
    assert_eq!(plot.lines().count(), 6);
}

#[test]
fn csv_outputs_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let db = benchmark(tmp.path());
    let report = ok(&["--format", "csv", "report", "--benchmark", p(&db)]);
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.starts_with("language,cr,samples,loc\n"), "{text}");
    assert_eq!(text.lines().count(), 1 + FIXTURE_LANGS.len());

    let m = ok(&["--format", "csv", "measure", p(&tmp.path().join("corpus"))]);
    let rows = String::from_utf8(m.stdout).unwrap();
    assert!(rows.starts_with("system,language,original_bytes,compressed_bytes,cr,loc,compressor\n"));
    assert_eq!(rows.lines().count(), 1 + 5 * FIXTURE_LANGS.len());

    // CSV measurements feed `benchmark` just like JSON.
    let csv_path = tmp.path().join("m.csv");
    fs::write(&csv_path, rows).unwrap();
    let from_csv = ok(&[
        "--reproducible",
        "benchmark",
        p(&csv_path),
        "--min-sample-bytes",
        "2000",
    ]);
    assert_eq!(from_csv.stdout, fs::read(&db).unwrap());
}

#[test]
fn validate_against_ranking() {
    let tmp = tempfile::tempdir().unwrap();
    let db = benchmark(tmp.path());
    let crs: serde_json::Value = serde_json::from_slice(&fs::read(&db).unwrap()).unwrap();
    let mut ranking = String::from("language,score\n");
    for (lang, f) in crs["factors"].as_object().unwrap() {
        let alias = match lang.as_str() {
            "csharp" => "C#",
            "javascript" => "JS",
            other => other,
        };
        ranking.push_str(&format!(
            "{alias},{}\n",
            f["cr_characteristic"].as_f64().unwrap() * 3.0 + 1.0
        ));
    }
    ranking.push_str("cobol,99\n");
    let r = tmp.path().join("ranking.csv");
    fs::write(&r, &ranking).unwrap();

    let out = ok(&["--reproducible", "validate", "--benchmark", p(&db), "--ranking", p(&r)]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rho"].as_f64(), Some(1.0));
    assert_eq!(report["n"].as_u64(), Some(5));
    assert_eq!(report["unmatched_external"][0], "cobol");
    assert_eq!(report["source_name"], "ranking");

    let out = ok(&[
        "validate",
        "--benchmark",
        p(&db),
        "--ranking",
        p(&r),
        "--orientation",
        "inverted",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rho"].as_f64(), Some(-1.0));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    assert_eq!(code(&["measure", p(&missing)]), 1);
    assert_eq!(code(&["measure", p(tmp.path()), "--exclude", "a[b"]), 2);
    assert_eq!(code(&["--profiles", p(&missing), "measure", p(tmp.path())]), 2);
    assert_eq!(code(&["report", "--benchmark", p(&missing)]), 1);
    assert_eq!(code(&["frobnicate"]), 2);

    let db = benchmark(tmp.path());
    let r = tmp.path().join("r.csv");
    fs::write(&r, "language,score\njava,1\npython,2\ncobol,3\n").unwrap();
    assert_eq!(code(&["validate", "--benchmark", p(&db), "--ranking", p(&r)]), 2);
    fs::write(&r, "language,score\njava,1\npython,1\nshell,1\n").unwrap();
    assert_eq!(code(&["validate", "--benchmark", p(&db), "--ranking", p(&r)]), 3);

    // No factor for any language of the system.
    let sys = tmp.path().join("rusty");
    fs::create_dir_all(&sys).unwrap();
    fs::write(sys.join("main.rs"), "fn main() {\n    println!(\"hi\");\n}\n").unwrap();
    assert_eq!(
        code(&["weigh", p(&sys), "--benchmark", p(&db), "-o", p(&tmp.path().join("w"))]),
        3
    );
    assert_eq!(
        code(&[
            "weigh",
            p(&sys),
            "--benchmark",
            p(&db),
            "-o",
            p(&tmp.path().join("w")),
            "--fallback",
            "cr=median"
        ]),
        0
    );

    let bogus = tmp.path().join("bogus.json");
    fs::write(&bogus, "{\"schema_version\": 99}").unwrap();
    assert_eq!(code(&["benchmark", p(&bogus)]), 2);
}

#[test]
fn duplicate_samples_across_inputs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    benchmark(tmp.path());
    let m = tmp.path().join("m.json");
    let out = run(&["benchmark", p(&m), p(&m)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("more than one"));
}
