//! Compression ratio of a file with the built-in codec, plus a round-trip check.
//!
//! ```bash
//! cargo run --release -p conciseness --example compress_ratio -- some/file
//! ```

use conciseness::compressor::{decode, encode, HEADER_LEN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => b"fn add(a: i32, b: i32) -> i32 { a + b }\n".repeat(200),
    };
    let packed = encode(&data);
    assert_eq!(decode(&packed)?, data);

    println!("input      {:>10} bytes", data.len());
    println!("compressed {:>10} bytes ({HEADER_LEN} header)", packed.len());
    println!("ratio      {:>10.3}", data.len() as f64 / packed.len() as f64);

    // The same input twice costs little more than once.
    let doubled = [data.as_slice(), data.as_slice()].concat();
    println!(
        "C(xx)/C(x) {:>10.3}",
        encode(&doubled).len() as f64 / packed.len() as f64
    );
    Ok(())
}
