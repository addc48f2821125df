//! Closed-form bounds on the value of a single revision for the five-stage
//! example, next to the LP values they bound.
//!
//! cargo run --example bounds_report

use ats_core::bounds::{bounds_report, select_t_cb, select_t_db};
use ats_core::formulations::build_single_resource;
use ats_core::{BuildOptions, ScenarioTree, Structure};
use ats_lp::{solve, SolverConfig};

const DEMANDS: [f64; 31] = [
    27.0, 29.0, 19.0, 38.0, 21.0, 25.0, 32.0, 23.0, 24.0, 25.0, 32.0, 41.0, 30.0, 24.0, 32.0, 27.0, 29.0, 35.0, 26.0,
    30.0, 25.0, 29.0, 31.0, 25.0, 28.0, 28.0, 26.0, 24.0, 22.0, 28.0, 29.0,
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = ScenarioTree::uniform(2, 5)?;
    let a = vec![1.0; tree.len()];
    let d = DEMANDS.to_vec();
    let opts = BuildOptions {
        relax_state: true,
        ..Default::default()
    };
    let lp = |s: Structure| -> Result<f64, Box<dyn std::error::Error>> {
        let m = build_single_resource(&tree, &a, &d, &s, &opts)?;
        Ok(solve(&m.model, &SolverConfig::default().with_gap(1e-9))?.objective)
    };
    let vt = lp(Structure::TwoStage)?;
    let vm = lp(Structure::MultiStage)?;

    let report = bounds_report(&tree, &a, &d)?;
    println!("delta* = {}  delta bar = {}  vT = {vt}  vM = {vm}", report.tree.delta_max, report.tree.delta_bar);
    println!("t*  vT-vR   [bounds]          vR-vM   [bounds]          delta+");
    for b in &report.per_revision {
        let vr = lp(Structure::Fixed(vec![b.stats.t]))?;
        println!(
            "{}   {:6.3}  [{:6.3}, {:6.3}]  {:6.3}  [{:6.3}, {:6.3}]  {:6.3}",
            b.stats.t,
            vt - vr,
            b.ts_minus_ats.lower,
            b.ts_minus_ats.upper,
            vr - vm,
            b.ats_minus_ms.lower,
            b.ats_minus_ms.upper,
            b.stats.delta_plus
        );
    }
    println!("t_DB = {}  t_CB = {}", select_t_db(&tree, &d)?, select_t_cb(&tree, &a)?);
    report.write_csv(std::io::stdout())?;
    Ok(())
}
