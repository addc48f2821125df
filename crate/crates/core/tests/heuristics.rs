mod common;

use ats_core::formulations::{BuildOptions, ExpansionProblem, Structure};
use ats_core::heuristics::{
    ats_relax, ats_relax_with, exact_ats, gain_loss_table, ms_relax, ts_relax, HeuristicResult, Method,
};
use ats_core::{CapacityExpansionData, PerNode, ScenarioTree};
use ats_lp::{solve, SolverConfig};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn tight() -> SolverConfig {
    SolverConfig::default().with_gap(1e-9)
}

fn example_capex() -> (ScenarioTree, CapacityExpansionData) {
    (example_tree(), CapacityExpansionData::single_resource(vec![1.0; 31], EXAMPLE_DEMANDS.to_vec()))
}

fn obj(tree: &ScenarioTree, data: &CapacityExpansionData, s: Structure) -> f64 {
    let m = data.compile(tree, &s, &BuildOptions::default()).unwrap();
    solve(&m.model, &tight()).unwrap().objective
}

#[test]
fn example_selections() {
    let (tree, data) = example_capex();
    let ts = ts_relax(&tree, &data, &tight()).unwrap();
    assert_eq!(ts.revisions, vec![3]);
    assert!((ts.objective - 35.75).abs() < 1e-6);
    assert!(ts.lower_bound.is_none());
    let ms = ms_relax(&tree, &data, &tight()).unwrap();
    assert_eq!(ms.revisions, vec![3]);
    assert!((ms.lower_bound.unwrap() - 34.0625).abs() < 1e-6);
    let ex = exact_ats(&tree, &data, &tight()).unwrap();
    assert_eq!(ex.revisions, vec![3]);
    assert!((ex.objective - 35.75).abs() < 1e-6);
    let table = gain_loss_table(&tree, &data, &tight()).unwrap();
    assert!((table.rvats_percent - 100.0 * 5.25 / 41.0).abs() < 1e-6);
    assert!(!table.rvats_is_lower_bound);
    let order: Vec<&str> = table.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(order, ["ms", "ats", "ts-relax", "ms-relax", "ats-relax", "ts"]);
}

#[test]
fn identical_resources_share_revision_times() {
    let mut r = rng(5);
    let tree = random_tree(&mut r, 4, 2);
    let single = random_capex(&mut r, &tree, 1);
    let dup = |v: &Vec<f64>| vec![v[0], v[0]];
    let mut data = random_capex(&mut r, &tree, 2);
    if let (PerNode::Each(src), PerNode::Each(dst)) = (&single.acquisition_cost, &mut data.acquisition_cost) {
        *dst = src.iter().map(dup).collect();
    }
    if let (PerNode::Each(src), PerNode::Each(dst)) = (&single.task_cost, &mut data.task_cost) {
        *dst = src.iter().map(dup).collect();
    }
    // one demand item per resource keeps the two halves independent
    data.items = 2;
    data.coverage = PerNode::Same(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    if let (PerNode::Each(src), PerNode::Each(dst)) = (&single.demand, &mut data.demand) {
        *dst = src.iter().map(dup).collect();
    }
    for h in [ts_relax(&tree, &data, &tight()).unwrap(), ms_relax(&tree, &data, &tight()).unwrap()] {
        assert_eq!(h.revisions[0], h.revisions[1], "{}", h.method);
    }
}

#[test]
fn two_stage_trees_force_stage_two() {
    let mut r = rng(8);
    let tree = random_tree(&mut r, 2, 3);
    let data = random_capex(&mut r, &tree, 2);
    assert_eq!(ts_relax(&tree, &data, &tight()).unwrap().revisions, vec![2, 2]);
    assert_eq!(ms_relax(&tree, &data, &tight()).unwrap().revisions, vec![2, 2]);
}

#[test]
fn single_scenario_is_deterministic() {
    let parents = [None, Some(0), Some(1)];
    let tree = ScenarioTree::new(&parents, &[1.0; 3], Default::default()).unwrap();
    let mut r = rng(9);
    let data = random_capex(&mut r, &tree, 2);
    let ms = obj(&tree, &data, Structure::MultiStage);
    let ex = exact_ats(&tree, &data, &tight()).unwrap();
    assert!((ex.objective - ms).abs() < 1e-6);
}

#[test]
fn results_are_deterministic_and_serializable() {
    let mut r = rng(10);
    let tree = random_tree(&mut r, 3, 3);
    let data = random_capex(&mut r, &tree, 2);
    for m in Method::ALL {
        let a = ats_core::heuristics::run_method(m, &tree, &data, &tight()).unwrap();
        let b = ats_core::heuristics::run_method(m, &tree, &data, &tight()).unwrap();
        assert_eq!((a.revisions.clone(), a.objective, a.lower_bound), (b.revisions, b.objective, b.lower_bound));
        let text = serde_json::to_string(&a).unwrap();
        let back: HeuristicResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        assert!(text.contains(&format!("\"method\":\"{}\"", m.label())));
    }
}

#[test]
fn relaxed_indicators_round_to_valid_stages() {
    let mut r = rng(12);
    let tree = random_tree(&mut r, 4, 2);
    let data = random_capex(&mut r, &tree, 2);
    let h = ats_relax_with(&tree, &data, &tight(), true).unwrap();
    assert!(h.revisions.iter().all(|&t| (1..=4).contains(&t)));
    assert!(h.lower_bound.unwrap() <= h.objective + 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn heuristics_sit_between_exact_and_two_stage(seed in any::<u64>()) {
        let mut r = rng(seed);
        let stages = r.random_range(2..=4usize);
        let tree = random_tree(&mut r, stages, 2);
        let resources = r.random_range(1..=2usize);
        let data = random_capex(&mut r, &tree, resources);
        let ms = obj(&tree, &data, Structure::MultiStage);
        let ts = obj(&tree, &data, Structure::TwoStage);
        let ex = exact_ats(&tree, &data, &tight()).unwrap();
        prop_assert!(ms <= ex.objective + 1e-6 && ex.objective <= ts + 1e-6);
        let costs = data.unit_costs(&tree).unwrap();
        let root_costs: f64 = costs.iter().map(|c| c[0]).sum();
        for h in [ts_relax(&tree, &data, &tight()).unwrap(), ms_relax(&tree, &data, &tight()).unwrap(), ats_relax(&tree, &data, &tight()).unwrap()] {
            prop_assert!(ex.objective <= h.objective + 1e-6 && h.objective <= ts + 1e-6, "{}: {} {} {}", h.method, ex.objective, h.objective, ts);
            if let Some(lb) = h.lower_bound {
                prop_assert!(lb <= ex.objective + 1e-6, "{}: bound {} above {}", h.method, lb, ex.objective);
                prop_assert!(h.gap_percent.unwrap() >= 0.0);
            }
            if let Some(g) = h.guarantee {
                prop_assert!(h.objective - ex.objective <= g + 1e-6, "{} > {}", h.objective - ex.objective, g);
                prop_assert!(g <= root_costs + 1e-9);
            }
        }
    }
}
