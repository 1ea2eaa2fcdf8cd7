//! Runs every named scenario and prints its checks.
//!
//!     cargo run --release --example scenarios [seed]

use sideband_bae::cli::recipes::{run_recipe, RECIPES};

fn main() -> sideband_bae::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut all = true;
    for name in RECIPES {
        let out = run_recipe(name, seed)?;
        println!("{name}: {}", if out.verdict.pass { "pass" } else { "FAIL" });
        for c in &out.verdict.checks {
            println!("  [{}] {}: {:.3e} (threshold {:.1e}) {}", if c.pass { "ok" } else { "!!" }, c.name, c.value, c.threshold, c.detail);
        }
        for n in &out.verdict.notes {
            println!("  note: {n}");
        }
        all &= out.verdict.pass;
    }
    std::process::exit(if all { 0 } else { 3 });
}
