//! Runs a small generation expansion sweep and writes `rvats.csv`,
//! `methods.csv`, `plans/` and `manifest.json`.
//!
//! cargo run --release --example genexp_sweep -- [output_dir]

use std::path::PathBuf;

use ats_core::experiments::{run_sweep, ExperimentPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("genexp_sweep"));
    let plan = ExperimentPlan {
        stages: vec![3, 4],
        gammas: vec![0.0, 0.005],
        replications: 2,
        time_limit: 30.0,
        ..ExperimentPlan::desk()
    };
    let results = run_sweep(&plan)?;
    results.write(&dir)?;
    print!("{}", results.rvats_csv());
    for v in &results.trend_violations {
        println!("trend: {} ({})", v.check, v.detail);
    }
    println!("{} cells in {:.1} s -> {}", results.rvats.len(), results.seconds, dir.display());
    Ok(())
}
