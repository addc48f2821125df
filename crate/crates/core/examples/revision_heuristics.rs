//! Chooses revision times for a two-resource capacity expansion problem with
//! each heuristic and with the exact joint model.
//!
//! cargo run --release --example revision_heuristics -- [seed]

use ats_core::formulations::PerNode;
use ats_core::heuristics::{gain_loss_table, run_method, Method};
use ats_core::{CapacityExpansionData, ScenarioTree};
use ats_lp::SolverConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = ScenarioTree::uniform(2, 4)?;
    let n = tree.len();
    let data = CapacityExpansionData {
        resources: 2,
        tasks: 2,
        items: 1,
        acquisition_cost: PerNode::Each((0..n).map(|_| vec![rng.random_range(1.0..6.0), rng.random_range(1.0..6.0)]).collect()),
        task_cost: PerNode::Each((0..n).map(|_| vec![rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)]).collect()),
        usage: PerNode::Same(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
        coverage: PerNode::Same(vec![vec![1.0, 1.0]]),
        demand: PerNode::Each((0..n).map(|_| vec![rng.random_range(2.0..12.0f64).round()]).collect()),
        max_capacity: Some(vec![15.0, 15.0]),
    };
    let config = SolverConfig::default().with_gap(1e-9);

    for method in Method::ALL {
        let r = run_method(method, &tree, &data, &config)?;
        println!(
            "{:<9} revisions {:?}  objective {:.4}  guarantee {}",
            method.label(),
            r.revisions,
            r.objective,
            r.guarantee.map_or("-".into(), |g| format!("{g:.4}"))
        );
    }

    let table = gain_loss_table(&tree, &data, &config)?;
    println!("V^TS {:.4}  V^MS {:.4}  RVATS {:.2}%", table.v_ts, table.v_ms, table.rvats_percent);
    Ok(())
}
