//! The whole pipeline on a generated corpus, through the same code the CLI runs.
//!
//! ```bash
//! cargo run --release -p conciseness --example end_to_end
//! ```
//! Writes into a temporary directory and prints the factor table and reports.

use std::fs;
use std::path::Path;

use clap::Parser;
use conciseness::cli::{run, Cli};

fn write_system(root: &Path, name: &str, seed: usize) -> std::io::Result<()> {
    let dir = root.join(name);
    fs::create_dir_all(&dir)?;
    let mut py = String::from("# generated\n");
    let mut java = String::from("/* generated */\npublic class Gen {\n");
    for i in 0..3000 {
        let k = (i * 7919 + seed * 104_729) % 1000;
        py.push_str(&format!(
            "def f{i}(x):\n    if x > {k}:\n        return x * {k}\n    return x + {}\n\n",
            i % 17
        ));
        java.push_str(&format!(
            "    static int f{i}(int x) {{\n        if (x > {k}) {{\n            return x * {k};\n        }}\n        return x + {};\n    }}\n",
            i % 17
        ));
    }
    java.push_str("}\n");
    fs::write(dir.join("gen.py"), py)?;
    fs::write(dir.join("Gen.java"), java)
}

fn cli(args: &[&str]) -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::try_parse_from(std::iter::once("conciseness").chain(args.iter().copied()))?;
    run(&cli)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let corpus = tmp.path().join("corpus");
    for (i, name) in ["alpha", "beta", "gamma"].iter().enumerate() {
        write_system(&corpus, name, i)?;
    }
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();

    cli(&["--reproducible", "measure", &p("corpus"), "-o", &p("m.json")])?;
    cli(&[
        "--reproducible",
        "benchmark",
        &p("m.json"),
        "--min-systems",
        "3",
        "--min-sample-bytes",
        "1000",
        "-o",
        &p("db.json"),
    ])?;
    cli(&["--format", "csv", "report", "--benchmark", &p("db.json")])?;
    cli(&[
        "--reproducible",
        "weigh",
        &p("corpus/alpha"),
        "--benchmark",
        &p("db.json"),
        "-o",
        &p("weigh"),
    ])?;
    println!("{}", fs::read_to_string(tmp.path().join("weigh/volume.json"))?);
    Ok(())
}
