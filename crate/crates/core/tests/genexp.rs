use std::collections::BTreeMap;

use ats_core::genexp::{build_genexp, extract_expansion_plan, CostTrend, GenExpData, GenerationType, Subperiod};
use ats_core::heuristics::solve_structure;
use ats_core::scenario_tree::generate_tree;
use ats_core::{Error, ExpansionProblem, ScenarioTree, Structure};
use ats_lp::{solve, SolverConfig, Status};
use proptest::prelude::*;

fn exact() -> SolverConfig {
    SolverConfig::default().with_gap(1e-9)
}

fn one_type(n0: u32, max: u32, eff: f64, l: f64, c: f64, f: f64, gk: f64, w: f64) -> GenExpData {
    GenExpData {
        version: 1,
        provenance: Default::default(),
        penalty: w,
        interest_rate: 0.0,
        subperiods: vec![Subperiod {
            name: "d".into(),
            hours: 1.0,
            root_demand: 0.0,
        }],
        types: vec![GenerationType {
            name: "g".into(),
            traditional: false,
            initial_units: n0,
            max_units: max,
            capacity_mw: eff,
            effective_capacity_mw: eff,
            peak_contribution: l,
            acquisition_cost: c,
            fixed_om: f,
            fuel_price: gk,
            variable_om: 0.0,
            trend: CostTrend::default(),
        }],
    }
}

fn with_demand(mut tree: ScenarioTree, field: &str, d: Vec<f64>) -> ScenarioTree {
    tree.set_payload(field, d).unwrap();
    tree
}

/// Cheapest way to meet demand `d` with `units` units of the single type:
/// generate as much as useful when generating beats curtailing.
fn recourse(data: &GenExpData, units: f64, d: f64) -> f64 {
    let g = &data.types[0];
    let per_mw_demand_gen = g.fuel_price / g.peak_contribution;
    let cap = g.effective_capacity_mw * units;
    let served = if per_mw_demand_gen < data.penalty {
        (g.peak_contribution * cap).min(d)
    } else {
        0.0
    };
    served / g.peak_contribution * g.fuel_price + (d - served) * data.penalty
}

#[test]
fn default_dataset_is_valid() {
    let data = GenExpData::default();
    data.check().unwrap();
    assert_eq!(data.types.len(), 6);
    let effective: Vec<f64> = data
        .types
        .iter()
        .map(|g| (g.initial_units as f64 * g.effective_capacity_mw).round())
        .collect();
    assert_eq!(effective, vec![4860.0, 2618.0, 2004.0, 1883.0, 134.0, 131.0]);
    let hours: f64 = data.subperiods.iter().map(|s| s.hours).sum();
    assert_eq!(hours, 8760.0);
    for g in data.types.iter().filter(|g| g.traditional) {
        assert!(g.max_units as f64 <= 1.2 * g.initial_units as f64);
    }
    let back = GenExpData::from_json(&data.to_json().unwrap()).unwrap();
    assert_eq!(back, data);
}

#[test]
fn generated_trees_have_the_expected_size() {
    let data = GenExpData::default();
    for (m, t) in [(2usize, 3usize), (3, 4), (2, 6)] {
        let tree = generate_tree(&data.tree_config(m, t, 0.005, 7)).unwrap();
        assert_eq!(tree.len(), (m.pow(t as u32) - 1) / (m - 1));
        for s in &data.subperiods {
            assert_eq!(tree.payload(&s.name).unwrap()[0], s.root_demand);
        }
    }
}

#[test]
fn unit_costs_follow_the_discounting_rule() {
    let data = GenExpData::default();
    let r = data.interest_rate;
    for (i, g) in data.types.iter().enumerate() {
        for t in 1..=4usize {
            let mut om = 0.0;
            for tau in t..=4 {
                om += g.fixed_om * (1.0 + g.trend.fixed_om).powi(tau as i32 - 1) / (1.0 + r).powi((tau - t) as i32);
            }
            let acq = g.acquisition_cost * (1.0 + g.trend.acquisition).powi(t as i32 - 1);
            let expected = (acq + om) * g.capacity_mw / (1.0 + r).powi(t as i32 - 1);
            let got = data.unit_cost(i, t, 4);
            assert!((got - expected).abs() <= 1e-9 * expected, "{} t={t}: {got} vs {expected}", g.name);
        }
    }
    // renewables get cheaper to buy, gas gets dearer to run
    let wind = data.types.iter().position(|g| g.name == "wind").unwrap();
    let gas = data.types.iter().position(|g| g.name == "ng_cc").unwrap();
    assert!(data.unit_cost(wind, 2, 2) < data.unit_cost(wind, 1, 2));
    assert!(data.generation_cost(gas, 0, 2) * (1.0 + r) > data.generation_cost(gas, 0, 1));
}

#[test]
fn zero_demand_costs_nothing() {
    let data = GenExpData::default();
    let mut tree = ScenarioTree::uniform(2, 3).unwrap();
    for s in &data.subperiods {
        tree.set_payload(&s.name, vec![0.0; tree.len()]).unwrap();
    }
    for structure in [
        Structure::TwoStage,
        Structure::MultiStage,
        Structure::Joint {
            x_upper: data.default_big_m(&tree).unwrap(),
        },
    ] {
        let (compiled, sol) = solve_structure(&tree, &data, &structure, &exact()).unwrap();
        assert!(sol.objective.abs() < 1e-6);
        let plan = extract_expansion_plan(&tree, &data, &compiled, &sol).unwrap();
        assert!(plan.nodes.is_empty(), "{:?}", plan.nodes);
    }
}

#[test]
fn single_node_matches_enumeration() {
    // 3 units at 10 MW each are needed for 25 MW; a unit costs 60 + 5
    for (d, w) in [(25.0, 100.0), (25.0, 2.0), (7.0, 100.0), (31.0, 100.0)] {
        let data = one_type(0, 3, 10.0, 1.0, 6.0, 0.5, 1.0, w);
        let tree = with_demand(ScenarioTree::uniform(1, 1).unwrap(), "d", vec![d]);
        let unit = (6.0 + 0.5) * 10.0;
        let best = (0..=3)
            .map(|x| unit * x as f64 + recourse(&data, x as f64, d))
            .fold(f64::INFINITY, f64::min);
        let (compiled, sol) = solve_structure(&tree, &data, &Structure::MultiStage, &exact()).unwrap();
        assert!((sol.objective - best).abs() < 1e-6, "d={d} w={w}: {} vs {best}", sol.objective);
        let plan = extract_expansion_plan(&tree, &data, &compiled, &sol).unwrap();
        assert!((plan.breakdown.total() - sol.objective).abs() < 1e-6);
    }
}

#[test]
fn capacity_shortfall_is_curtailed() {
    let data = one_type(2, 2, 10.0, 0.8, 6.0, 0.0, 1.0, 50.0);
    let tree = with_demand(ScenarioTree::uniform(1, 1).unwrap(), "d", vec![30.0]);
    let (compiled, sol) = solve_structure(&tree, &data, &Structure::TwoStage, &exact()).unwrap();
    let plan = extract_expansion_plan(&tree, &data, &compiled, &sol).unwrap();
    // 20 MW of generation cover 16 MW of demand; 14 MW are curtailed
    assert!((plan.breakdown.generation - 20.0).abs() < 1e-6);
    assert!((plan.breakdown.curtailment - 14.0 * 50.0).abs() < 1e-6);
    assert_eq!(plan.breakdown.acquisition, 0.0);
}

#[test]
fn traditional_growth_cap_is_enforced() {
    let mut data = GenExpData::default();
    data.types[0].max_units = data.types[0].initial_units * 2;
    assert!(matches!(data.check(), Err(Error::InvalidData(_))));
    let mut data = GenExpData::default();
    data.types[1].fuel_price = -1.0;
    assert!(matches!(data.check(), Err(Error::InvalidCosts(_))));
    let data = GenExpData::default();
    let tree = ScenarioTree::uniform(2, 2).unwrap();
    assert!(matches!(build_genexp(&tree, &data, &Structure::TwoStage), Err(Error::UnknownField(_))));
}

fn small_default_tree(seed: u64) -> (GenExpData, ScenarioTree) {
    let data = GenExpData::default();
    let tree = generate_tree(&data.tree_config(2, 3, 0.01, seed)).unwrap();
    (data, tree)
}

#[test]
fn decisions_agree_before_the_revision_time() {
    let (data, tree) = small_default_tree(3);
    let joint = Structure::Joint {
        x_upper: data.default_big_m(&tree).unwrap(),
    };
    for structure in [Structure::Fixed(vec![2, 3, 1, 2, 3, 2]), joint] {
        let (compiled, sol) = solve_structure(&tree, &data, &structure, &exact()).unwrap();
        let x = compiled.state_values(&sol);
        let revisions = match &structure {
            Structure::Fixed(rv) => rv.clone(),
            _ => compiled.revisions(&sol).unwrap(),
        };
        for (i, &t_star) in revisions.iter().enumerate() {
            for t in 1..t_star {
                let stage = tree.nodes_in_stage(t).unwrap();
                for &n in stage {
                    assert!((x[i][n.0] - x[i][stage[0].0]).abs() < 1e-6, "type {i} stage {t}");
                }
            }
        }
        let plan = extract_expansion_plan(&tree, &data, &compiled, &sol).unwrap();
        assert!((plan.breakdown.total() - sol.objective).abs() <= 1e-7 * sol.objective.abs());
    }
}

#[test]
fn structures_are_ordered_and_plans_are_consistent() {
    let (data, tree) = small_default_tree(11);
    let (ts_c, ts) = solve_structure(&tree, &data, &Structure::TwoStage, &exact()).unwrap();
    let (_, ms) = solve_structure(&tree, &data, &Structure::MultiStage, &exact()).unwrap();
    let joint = Structure::Joint {
        x_upper: data.default_big_m(&tree).unwrap(),
    };
    let (_, ats) = solve_structure(&tree, &data, &joint, &exact()).unwrap();
    let tol = 1e-6 * ts.objective.abs();
    assert!(ms.objective <= ats.objective + tol && ats.objective <= ts.objective + tol);

    let plan = extract_expansion_plan(&tree, &data, &ts_c, &ts).unwrap();
    let mut stages: Vec<usize> = plan.nodes.iter().map(|n| n.stage).collect();
    let len = stages.len();
    stages.dedup();
    assert_eq!(stages.len(), len, "a two-stage plan is one chain of stage decisions");
    // the root sits at the revision stage of every type; later nodes appear only when they buy
    assert!(plan.nodes.iter().filter(|n| n.stage > 1).all(|n| n.units.values().any(|&u| u > 0.0)));
    for node in &plan.nodes {
        for g in &data.types {
            let e = node.units[&g.name] * g.effective_capacity_mw;
            assert!((node.effective_mw[&g.name] - e).abs() < 1e-9);
        }
    }
    assert!((plan.breakdown.total() - ts.objective).abs() <= 1e-7 * ts.objective.abs());
    let json = serde_json::to_string(&plan).unwrap();
    assert!(json.contains("\"breakdown\""));
}

#[test]
fn leaf_cap_limits_total_units() {
    let (data, tree) = small_default_tree(5);
    let (compiled, sol) = solve_structure(&tree, &data, &Structure::MultiStage, &exact()).unwrap();
    let x = compiled.state_values(&sol);
    for &leaf in tree.leaves() {
        let path = tree.path_to_root(leaf).unwrap();
        for (i, g) in data.types.iter().enumerate() {
            let total: f64 = path.iter().map(|n| x[i][n.0]).sum();
            assert!(total <= (g.max_units - g.initial_units) as f64 + 1e-6);
            assert!(x[i].iter().all(|v| (v - v.round()).abs() < 1e-6));
        }
    }
    assert_eq!(sol.status, Status::Optimal);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Two-stage tree with one type: the multi-stage optimum equals brute
    /// force over root and leaf purchases.
    #[test]
    fn two_stage_tree_matches_enumeration(
        d in proptest::collection::vec(0.0..40.0f64, 3),
        n0 in 0u32..2,
        c in 1.0..8.0f64,
        w in 0.5..20.0f64,
        p in 0.1..0.9f64,
    ) {
        let mut data = one_type(n0, n0 + 3, 10.0, 0.9, c, 0.0, 1.0, w);
        data.interest_rate = 0.1;
        let tree = ScenarioTree::new(&[None, Some(0), Some(0)], &[1.0, p, 1.0 - p], BTreeMap::new()).unwrap();
        let tree = with_demand(tree, "d", d.clone());
        let unit = |t: usize| c * 10.0 / 1.1f64.powi(t as i32 - 1);
        let disc = |t: usize| 1.1f64.powi(t as i32 - 1).recip();
        let mut best = f64::INFINITY;
        let mut best_ts = f64::INFINITY;
        for x0 in 0..=3u32 {
            let root = unit(1) * x0 as f64 + recourse(&data, (n0 + x0) as f64, d[0]);
            let leaf = |n: usize, x1: u32| unit(2) * x1 as f64 + disc(2) * recourse(&data, (n0 + x0 + x1) as f64, d[n]);
            let mut total = root;
            for (n, q) in [(1usize, p), (2, 1.0 - p)] {
                total += q * (0..=3 - x0).map(|x1| leaf(n, x1)).fold(f64::INFINITY, f64::min);
            }
            best = best.min(total);
            for x1 in 0..=3 - x0 {
                best_ts = best_ts.min(root + p * leaf(1, x1) + (1.0 - p) * leaf(2, x1));
            }
        }
        let (_, ms) = solve_structure(&tree, &data, &Structure::MultiStage, &exact()).unwrap();
        prop_assert!((ms.objective - best).abs() < 1e-6 * (1.0 + best), "{} vs {}", ms.objective, best);
        let (_, ts) = solve_structure(&tree, &data, &Structure::TwoStage, &exact()).unwrap();
        prop_assert!((ts.objective - best_ts).abs() < 1e-6 * (1.0 + best_ts), "{} vs {}", ts.objective, best_ts);
        let joint = build_genexp(&tree, &data, &Structure::Joint { x_upper: data.default_big_m(&tree).unwrap() }).unwrap();
        let ats = solve(&joint.model, &exact()).unwrap();
        prop_assert!((ats.objective - best).abs() < 1e-6 * (1.0 + best));
    }
}
