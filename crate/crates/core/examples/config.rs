//! Configuration documents: a partial TOML file resolved against a preset,
//! the complete manifest it expands to, and how mistakes are reported.
//!
//! cargo run --release --example config -- [path.toml]

use cellopt::config::PRESETS;
use cellopt::{load_config, parse_config};

const SAMPLE: &str = r#"
preset = "example3"
iterations = 50

[mesh]
n = 60

[volume]
phase1 = 0.40
phase3 = 0.10
"#;

fn main() -> cellopt::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => load_config(path.as_ref())?,
        None => parse_config(SAMPLE)?,
    };
    println!("# resolved manifest\n{}", config.to_toml());

    println!("# presets: {}", PRESETS.join(", "));
    for bad in ["[mesh]\nn = 3", "iterations = 10\ncolour = \"red\"", "[objective]\nweights = [1.0]", "mode = plain"] {
        match parse_config(bad) {
            Ok(_) => println!("accepted: {bad:?}"),
            Err(e) => println!("rejected {bad:?}\n    {e}"),
        }
    }
    Ok(())
}
