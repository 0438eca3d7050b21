//! Measure a corpus and aggregate the ratios into a benchmark database.
//!
//! ```bash
//! cargo run --release -p conciseness --example build_benchmark -- corpus/ [min_systems]
//! ```
//! Each child directory of `corpus/` is one system.

use conciseness::benchmark::{aggregate, measure_corpus, save_benchmark, Thresholds};
use conciseness::compressor::CompressorSpec;
use conciseness::corpus::{scan_corpus, ProfileSet, ScanOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let root = args.next().ok_or("usage: build_benchmark <corpus> [min_systems]")?;
    let min_systems = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);

    let profiles = ProfileSet::defaults();
    let manifest = scan_corpus(&[root.into()], &profiles, &ScanOptions::default())?;
    let result = measure_corpus(&manifest, &profiles, &CompressorSpec::builtin());
    for m in &result.measurements {
        eprintln!(
            "{:<24} {:<12} {:>9} bytes  cr {:.3}",
            m.system_id, m.language_id, m.original_bytes, m.compression_ratio
        );
    }

    let thresholds = Thresholds {
        min_systems,
        ..Thresholds::default()
    };
    let db = aggregate(&result.measurements, thresholds)?;
    for f in db.factors.values() {
        eprintln!(
            "{}: {:.3} [{:.3}, {:.3}] over {} systems",
            f.language_id, f.cr_characteristic, f.cr_p25, f.cr_p75, f.sample_count
        );
    }
    save_benchmark(&db, std::io::stdout().lock())?;
    Ok(())
}
