//! Builds the five-stage binary example tree and a random demand tree, checks
//! both through the JSON tree format and prints their shape.
//!
//! cargo run --example scenario_trees -- [output_dir]

use std::path::PathBuf;

use ats_core::genexp::GenExpData;
use ats_core::scenario_tree::generate_tree;
use ats_core::ScenarioTree;

const DEMANDS: [f64; 31] = [
    27.0, 29.0, 19.0, 38.0, 21.0, 25.0, 32.0, 23.0, 24.0, 25.0, 32.0, 41.0, 30.0, 24.0, 32.0, 27.0, 29.0, 35.0, 26.0,
    30.0, 25.0, 29.0, 31.0, 25.0, 28.0, 28.0, 26.0, 24.0, 22.0, 28.0, 29.0,
];

fn describe(name: &str, tree: &ScenarioTree) {
    println!("{name}: {} nodes, {} stages, {} leaves", tree.len(), tree.stage_count(), tree.leaves().len());
    for t in 1..=tree.stage_count() {
        let nodes = tree.nodes_in_stage(t).expect("stage in range");
        let mass: f64 = nodes.iter().map(|&n| tree.probability(n)).sum();
        println!("  stage {t}: {} nodes, probability {mass}", nodes.len());
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;

    let mut example = ScenarioTree::uniform(2, 5)?;
    example.set_payload("a", vec![1.0; 31])?;
    example.set_payload("delta", DEMANDS.to_vec())?;
    describe("example", &example);
    let leaf = example.leaves()[0];
    let path: Vec<usize> = example.path_to_root(leaf)?.iter().map(|n| n.index()).collect();
    println!("  path of leaf {}: {path:?}", leaf.index());
    let path_max = example.subtree_max(example.payload("delta")?);
    println!("  largest demand below the root: {}", path_max[0]);

    let data = GenExpData::default();
    let random = generate_tree(&data.tree_config(3, 4, 0.01, 7))?;
    describe("random", &random);

    for (name, tree) in [("five_stage", &example), ("random_demand", &random)] {
        let file = dir.join(format!("{name}.json"));
        tree.save(&file)?;
        let back = ScenarioTree::load(&file)?;
        assert_eq!(&back, tree);
        println!("wrote and reloaded {}", file.display());
    }

    let broken = r#"{"version":1,"stage_count":2,"parents":[null,0,0],"probabilities":[1.0,0.5,0.4],"payloads":{}}"#;
    match ScenarioTree::from_json(broken) {
        Ok(_) => println!("unexpectedly accepted a tree whose children do not sum to one"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
