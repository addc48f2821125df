#![allow(dead_code)]

use std::collections::BTreeMap;

use ats_core::{CapacityExpansionData, PerNode, ScenarioTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Demands of the five-stage binary example tree, in breadth-first order.
pub const EXAMPLE_DEMANDS: [f64; 31] = [
    27.0, 29.0, 19.0, 38.0, 21.0, 25.0, 32.0, 23.0, 24.0, 25.0, 32.0, 41.0, 30.0, 24.0, 32.0, 27.0, 29.0, 35.0, 26.0,
    30.0, 25.0, 29.0, 31.0, 25.0, 28.0, 28.0, 26.0, 24.0, 22.0, 28.0, 29.0,
];

/// Binary five-stage tree with equal branch probabilities, unit costs in
/// field `a` and the example demands in field `delta`.
pub fn example_tree() -> ScenarioTree {
    let mut tree = ScenarioTree::uniform(2, 5).unwrap();
    tree.set_payload("a", vec![1.0; 31]).unwrap();
    tree.set_payload("delta", EXAMPLE_DEMANDS.to_vec()).unwrap();
    tree
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree with `stages` stages, 1 to `max_branches` children per node
/// and random conditional probabilities.
pub fn random_tree(rng: &mut ChaCha8Rng, stages: usize, max_branches: usize) -> ScenarioTree {
    let mut parents = vec![None];
    let mut probs = vec![1.0];
    let mut frontier = vec![0usize];
    for _ in 1..stages {
        let mut next = Vec::new();
        for &p in &frontier {
            let k = rng.random_range(1..=max_branches);
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = w.iter().sum();
            for wi in w {
                parents.push(Some(p));
                probs.push(probs[p] * wi / total);
                next.push(parents.len() - 1);
            }
        }
        frontier = next;
    }
    ScenarioTree::new(&parents, &probs, BTreeMap::new()).unwrap()
}

/// Node values drawn uniformly from `lo..hi` and rounded to `step`.
pub fn random_values(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    (0..n).map(|_| (rng.random_range(lo..hi) / step).round() * step).collect()
}

/// Capacity instance with `resources` resources that each serve one task;
/// every task covers the single demand item, so resources compete on cost.
pub fn random_capex(rng: &mut ChaCha8Rng, tree: &ScenarioTree, resources: usize) -> CapacityExpansionData {
    let n = tree.len();
    let acquisition: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..resources).map(|_| rng.random_range(1.0..6.0f64).round()).collect())
        .collect();
    let task: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..resources).map(|_| rng.random_range(0.0..2.0f64)).collect())
        .collect();
    let demand: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(2.0..12.0f64)]).collect();
    let usage: Vec<Vec<f64>> = (0..resources)
        .map(|i| (0..resources).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    CapacityExpansionData {
        resources,
        tasks: resources,
        items: 1,
        acquisition_cost: PerNode::Each(acquisition),
        task_cost: PerNode::Each(task),
        usage: PerNode::Same(usage),
        coverage: PerNode::Same(vec![vec![1.0; resources]]),
        demand: PerNode::Each(demand),
        max_capacity: Some(vec![15.0; resources]),
    }
}

/// Every vector in `{1..=stages}^resources`, in lexicographic order.
pub fn all_revision_vectors(stages: usize, resources: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..resources {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..=stages).map(move |t| {
                    let mut w = v.clone();
                    w.push(t);
                    w
                })
            })
            .collect();
    }
    out
}

/// Tree with exactly `branches` children per node and random conditional
/// probabilities.
pub fn random_full_tree(rng: &mut ChaCha8Rng, stages: usize, branches: usize) -> ScenarioTree {
    let mut parents = vec![None];
    let mut probs = vec![1.0];
    let mut frontier = vec![0usize];
    for _ in 1..stages {
        let mut next = Vec::new();
        for &p in &frontier {
            let w: Vec<f64> = (0..branches).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = w.iter().sum();
            for wi in w {
                parents.push(Some(p));
                probs.push(probs[p] * wi / total);
                next.push(parents.len() - 1);
            }
        }
        frontier = next;
    }
    ScenarioTree::new(&parents, &probs, BTreeMap::new()).unwrap()
}
