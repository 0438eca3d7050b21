//! Cross-check the built-in codec against an external large-window compressor.
//!
//! ```bash
//! cargo run -p conciseness --example compare_compressors -- python /usr/lib/python3.11 [more dirs...]
//! ```
//!
//! Each directory is cleaned as one sample of the given language and
//! compressed twice: with the built-in codec and with `xz -9` (override with
//! `REFERENCE_CMD="zstd -19 --long=27 -c"`). Every sample is also decoded
//! again to confirm the round trip.

use std::path::PathBuf;
use std::time::Instant;

use conciseness::cleaner::clean_sample;
use conciseness::compressor::{compress, decode, encode, CompressorSpec};
use conciseness::corpus::{scan_corpus, ProfileSet, ScanOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let language = args.next().ok_or("usage: compare_compressors <language> <dir>...")?;
    let dirs: Vec<PathBuf> = args.map(PathBuf::from).collect();

    let profiles = ProfileSet::defaults();
    let profile = profiles.get(&language).ok_or("unknown language")?;
    let reference_cmd = std::env::var("REFERENCE_CMD").unwrap_or_else(|_| "xz -9 -c".into());
    let reference = CompressorSpec::external(
        "reference",
        reference_cmd.split_whitespace().map(String::from).collect(),
    )?;
    let builtin = CompressorSpec::builtin();
    let opts = ScanOptions {
        single_system: true,
        ..Default::default()
    };

    println!(
        "{:<40} {:>10} {:>8} {:>8} {:>7} {:>7}",
        "system", "bytes", "builtin", "ref", "diff%", "secs"
    );
    for dir in dirs {
        let manifest = scan_corpus(std::slice::from_ref(&dir), &profiles, &opts)?;
        let system = &manifest.systems[0];
        let sample = clean_sample(&system.system_id, &system.absolute_files(&language), profile)?;
        if sample.cleaned_bytes.is_empty() {
            println!("{:<40} (no {language} code)", dir.display());
            continue;
        }
        let n = sample.cleaned_bytes.len() as f64;
        let t = Instant::now();
        let ours = n / compress(&sample.cleaned_bytes, &builtin)? as f64;
        let secs = t.elapsed().as_secs_f64();
        if decode(&encode(&sample.cleaned_bytes))? != sample.cleaned_bytes {
            return Err(format!("{}: round trip mismatch", system.system_id).into());
        }
        let theirs = n / compress(&sample.cleaned_bytes, &reference)? as f64;
        println!(
            "{:<40} {:>10} {:>8.3} {:>8.3} {:>7.2} {:>7.2}",
            system.system_id,
            sample.cleaned_bytes.len(),
            ours,
            theirs,
            100.0 * (ours - theirs) / theirs,
            secs
        );
    }
    Ok(())
}
