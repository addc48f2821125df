//! Simulated cost of the static, adaptive and dynamic newsvendor policies as
//! a function of the revision time, for the three bundled settings.
//!
//! cargo run --release --example newsvendor_curve -- [scenarios] [seed]

use ats_core::newsvendor::{best_revision_time, simulate_curve, CurvePolicy, NewsvendorConfig, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let sim = Simulation {
        scenarios: args.first().map_or(Ok(20_000), |s| s.parse())?,
        seed: args.get(1).map_or(Ok(1), |s| s.parse())?,
    };
    let policies = [CurvePolicy::Static, CurvePolicy::Adaptive, CurvePolicy::Dynamic];
    for (name, config) in [
        ("stationary", NewsvendorConfig::stationary()),
        ("increasing demand", NewsvendorConfig::increasing_demand()),
        ("increasing costs", NewsvendorConfig::increasing_costs()),
    ] {
        let points = simulate_curve(&config, &policies, 1..=config.horizon(), &sim)?;
        println!("{name}");
        for p in &points {
            println!("  {:<9} t*={}  {:8.2} +- {:.2}", p.policy, p.revision_time, p.mean, p.std_error);
        }
        if let Some(t) = best_revision_time(&points) {
            println!("  best revision time {t}");
        }
    }
    Ok(())
}
