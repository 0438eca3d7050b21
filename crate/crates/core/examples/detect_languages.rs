//! Walk a directory and count files per detected language.
//!
//! ```bash
//! cargo run -p conciseness --example detect_languages -- path/to/corpus
//! ```

use std::collections::BTreeMap;

use conciseness::corpus::{scan_corpus, ProfileSet, ScanOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    let profiles = ProfileSet::defaults();
    let manifest = scan_corpus(&[root.into()], &profiles, &ScanOptions::default())?;

    for system in &manifest.systems {
        let langs: Vec<String> = system.files.iter().map(|(l, f)| format!("{l}={}", f.len())).collect();
        println!("{:<30} {}", system.system_id, langs.join(" "));
    }
    let mut reasons = BTreeMap::new();
    for s in &manifest.skipped {
        *reasons.entry(format!("{:?}", s.reason)).or_insert(0usize) += 1;
    }
    println!("skipped: {reasons:?}");
    Ok(())
}
