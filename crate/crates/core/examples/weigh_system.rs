//! Raw versus CR-weighted code volume and McCabe estimate for one system.
//!
//! ```bash
//! cargo run --release -p conciseness --example weigh_system -- path/to/system db.json
//! ```
//! Without a database a small hand-made one is used.

use std::collections::BTreeMap;

use conciseness::benchmark::{aggregate, load_benchmark, Thresholds};
use conciseness::compressor::CompressionMeasurement;
use conciseness::corpus::{scan_corpus, ProfileSet, ScanOptions};
use conciseness::metrics::{mccabe_report, system_sizes, volume_breakdown, FallbackPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let root = args.next().ok_or("usage: weigh_system <system> [db.json]")?;
    let db = match args.next() {
        Some(path) => load_benchmark(std::fs::File::open(path)?)?,
        None => {
            let mut ms = Vec::new();
            for (lang, cr) in [("python", 4.2), ("javascript", 4.8), ("java", 5.6), ("c", 4.4)] {
                for sys in 0..3 {
                    ms.push(CompressionMeasurement::new(
                        format!("s{sys}"),
                        lang,
                        500_000,
                        (500_000.0 / cr) as u64,
                        10_000,
                        "builtin-lz",
                    ));
                }
            }
            aggregate(
                &ms,
                Thresholds {
                    min_systems: 3,
                    ..Thresholds::default()
                },
            )?
        }
    };

    let profiles = ProfileSet::defaults();
    let opts = ScanOptions {
        single_system: true,
        ..Default::default()
    };
    let manifest = scan_corpus(&[root.into()], &profiles, &opts)?;
    let system = &manifest.systems[0];
    let sizes = system_sizes(system, &profiles)?;
    let locs: BTreeMap<String, u64> = sizes.iter().map(|(l, s)| (l.clone(), s.loc)).collect();

    let volume = volume_breakdown(&system.system_id, &locs, &db, FallbackPolicy::BenchmarkMedian)?;
    println!(
        "{:<12} {:>9} {:>7} {:>11} {:>7} {:>7}",
        "language", "loc", "cr", "weighted", "raw%", "wtd%"
    );
    for l in &volume.languages {
        println!(
            "{:<12} {:>9} {:>7.3} {:>11.1} {:>7.2} {:>7.2}",
            l.language_id,
            l.raw_loc,
            l.cr,
            l.weighted_loc,
            100.0 * l.raw_share,
            100.0 * l.weighted_share
        );
    }

    let mccabe = mccabe_report(&system.system_id, &sizes, &db, FallbackPolicy::BenchmarkMedian)?;
    println!(
        "\n{:<12} {:>9} {:>9} {:>9}",
        "language", "mccabe", "norm raw", "norm wtd"
    );
    for l in &mccabe.languages {
        println!(
            "{:<12} {:>9} {:>9.2} {:>9.2}",
            l.language_id, l.total_mccabe, l.normalized_raw, l.normalized_weighted
        );
    }
    Ok(())
}
