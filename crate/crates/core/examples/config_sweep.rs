//! Config-driven noise budget over pump power and loss, written as CSV, the
//! same path the `budget` subcommand takes.
//!
//!     cargo run --example config_sweep [config.json] > budget.csv

use std::path::PathBuf;

use sideband_bae::cli::{run_budget, write_budget, Format, RunConfig};

fn main() -> sideband_bae::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/asymmetric_sweep.json"));
    let cfg = RunConfig::load(&path)?;
    let table = run_budget(&cfg)?;
    for f in &table.regime_findings {
        eprintln!("warning [{}]: {} ({})", f.variant, f.finding.inequality, f.finding.detail);
    }
    eprintln!("{} rows from {}", table.rows.len(), path.display());
    write_budget(&table, Format::Csv, std::io::stdout().lock())
}
