//! Compiles the adaptive model of the five-stage example with a revision at
//! stage 4, writes it as LP text, reads it back and solves it with both
//! backends.
//!
//! cargo run --example lp_roundtrip

use ats_core::{BuildOptions, CapacityExpansionData, ExpansionProblem, ScenarioTree, Structure};
use ats_lp::{read_lp, solve, write_lp, Backend, SolverConfig};

const DEMANDS: [f64; 31] = [
    27.0, 29.0, 19.0, 38.0, 21.0, 25.0, 32.0, 23.0, 24.0, 25.0, 32.0, 41.0, 30.0, 24.0, 32.0, 27.0, 29.0, 35.0, 26.0,
    30.0, 25.0, 29.0, 31.0, 25.0, 28.0, 28.0, 26.0, 24.0, 22.0, 28.0, 29.0,
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = ScenarioTree::uniform(2, 5)?;
    let data = CapacityExpansionData::single_resource(vec![1.0; 31], DEMANDS.to_vec());
    let compiled = data.compile(&tree, &Structure::Fixed(vec![4]), &BuildOptions::default())?;
    let text = write_lp(&compiled.model)?;
    println!("{}", text.lines().take(12).collect::<Vec<_>>().join("\n"));
    println!("... {} lines", text.lines().count());

    let back = read_lp(&text)?;
    assert_eq!(back, compiled.model);
    println!("read back {} variables and {} constraints", back.num_vars(), back.num_constraints());

    for backend in [Backend::Highs, Backend::Embedded] {
        let config = SolverConfig::default().with_backend(backend);
        match solve(&back, &config) {
            Ok(sol) => println!("{backend:?}: {} objective {} in {:.3} s", sol.status, sol.objective, sol.seconds),
            Err(e) => println!("{backend:?}: {e}"),
        }
    }
    Ok(())
}
