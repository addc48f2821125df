//! Generation expansion on a random tree: solves the two-stage, multi-stage
//! and adaptive models and prints the adaptive plan.
//!
//! cargo run --release --example genexp_plan -- [branches] [stages] [gamma] [seed]

use ats_core::genexp::{extract_expansion_plan, GenExpData};
use ats_core::heuristics::{gain_loss_table, solve_structure};
use ats_core::scenario_tree::generate_tree;
use ats_core::{ExpansionProblem, Structure};
use ats_lp::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let branches: usize = arg(0, "2").parse()?;
    let stages: usize = arg(1, "4").parse()?;
    let gamma: f64 = arg(2, "0.01").parse()?;
    let seed: u64 = arg(3, "1").parse()?;

    let data = GenExpData::default();
    let tree = generate_tree(&data.tree_config(branches, stages, gamma, seed))?;
    let config = SolverConfig::default();
    println!("{} nodes, {} stages", tree.len(), tree.stage_count());

    let started = std::time::Instant::now();
    let table = gain_loss_table(&tree, &data, &config)?;
    println!("V^TS = {:.6e}  V^MS = {:.6e}", table.v_ts, table.v_ms);
    for row in &table.rows {
        println!(
            "{:<10} obj {:>14}  gain {:>8}  loss {:>8}  gap {:>8}  rev {:?}",
            row.method,
            row.objective.map_or("-".into(), |v| format!("{v:.6e}")),
            row.gain_percent.map_or("-".into(), |v| format!("{v:.3}")),
            row.loss_percent.map_or("-".into(), |v| format!("{v:.3}")),
            row.gap_percent.map_or("-".into(), |v| format!("{v:.3}")),
            row.revisions,
        );
    }
    println!("RVATS = {:.3}%  ({:.1}s)", table.rvats_percent, started.elapsed().as_secs_f64());

    let joint = Structure::Joint { x_upper: data.default_big_m(&tree)? };
    let (compiled, sol) = solve_structure(&tree, &data, &joint, &config)?;
    let plan = extract_expansion_plan(&tree, &data, &compiled, &sol)?;
    println!("{}", serde_json::to_string_pretty(&plan)?);
    Ok(())
}
