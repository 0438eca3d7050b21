//! Show how each line of a source file is classified and what survives cleaning.
//!
//! ```bash
//! cargo run -p conciseness --example clean_source -- src/lib.rs
//! ```
//! Without an argument a small built-in Java snippet is used.

use conciseness::cleaner::{classify_lines, clean_sources, LineClass};
use conciseness::corpus::ProfileSet;

const SNIPPET: &str = r#"/* Greeter.
 * Says hello. */
public class Hello {

    // entry point
    public static void main(String[] args) {
        String s = "/* not a comment */";
        System.out.println(s); // trailing
    }
}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profiles = ProfileSet::defaults();
    let (text, language) = match std::env::args().nth(1) {
        Some(path) => {
            let language = profiles.detect(path.as_ref()).ok_or("unknown language")?.to_string();
            (std::fs::read_to_string(&path)?, language)
        }
        None => (SNIPPET.to_string(), "java".to_string()),
    };
    let profile = profiles.get(&language).expect("detected language has a profile");

    for (line, class) in text.lines().zip(classify_lines(&text, profile)) {
        let tag = match class {
            LineClass::Code => 'C',
            LineClass::CommentOnly => 'M',
            LineClass::Blank => 'B',
        };
        println!("{tag} | {line}");
    }
    let sample = clean_sources("example", profile, [text.as_bytes()]);
    println!(
        "\n{language}: {} of {} lines kept, {} bytes",
        sample.loc, sample.physical_lines, sample.original_bytes_count
    );
    Ok(())
}
