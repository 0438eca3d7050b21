//! Spearman correlation between benchmark ratios and an external ranking.
//!
//! ```bash
//! cargo run -p conciseness --example validate_ranking
//! ```

use conciseness::benchmark::{aggregate, Thresholds};
use conciseness::compressor::CompressionMeasurement;
use conciseness::validation::{compare, AliasTable, ExternalRanking, Orientation};

const RANKING: &str = "language,score\nC#,6.1\nPython,3.9\nJS,4.4\nJava,6.0\nRuby,3.5\nHaskell,2.9\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let crs = [
        ("csharp", 6.4),
        ("python", 4.3),
        ("javascript", 4.9),
        ("java", 6.1),
        ("ruby", 4.0),
        ("c", 4.6),
    ];
    let mut ms = Vec::new();
    for (lang, cr) in crs {
        for sys in 0..5 {
            let cr = cr + 0.05 * sys as f64;
            ms.push(CompressionMeasurement::new(
                format!("sys{sys}"),
                lang,
                1 << 20,
                ((1 << 20) as f64 / cr) as u64,
                20_000,
                "builtin-lz",
            ));
        }
    }
    let db = aggregate(&ms, Thresholds::default())?;

    // A high score here means verbose, like a high ratio.
    let external = ExternalRanking::from_csv("loc-per-feature", RANKING.as_bytes(), &AliasTable::default())?;
    let report = compare(&db, &external, Orientation::Same)?;
    for p in &report.pairs {
        println!(
            "{:<12} cr {:.3}  score {:.1}",
            p.language_id, p.local_cr, p.external_score
        );
    }
    println!("n = {}, rho = {:.4}", report.n, report.rho);
    println!(
        "unmatched: local {:?}, external {:?}",
        report.unmatched_local, report.unmatched_external
    );
    Ok(())
}
