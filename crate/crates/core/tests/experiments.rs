use ats_core::experiments::{node_count, run_sweep, ExperimentPlan};

fn tiny() -> ExperimentPlan {
    ExperimentPlan {
        branches: vec![2],
        stages: vec![2, 3],
        gammas: vec![0.0, 0.01],
        method_gamma: 0.01,
        replications: 2,
        base_seed: 5,
        time_limit: 60.0,
        gap: 1e-6,
        workers: 2,
        ..ExperimentPlan::desk()
    }
}

#[test]
fn node_count_endpoints() {
    assert_eq!(node_count(2, 3), Some(7));
    assert_eq!(node_count(3, 10), Some(29524));
    assert_eq!(node_count(1, 4), Some(4));
    assert_eq!(node_count(2, 64), None);
    for m in 2..5u64 {
        for t in 1..8u32 {
            let direct: u64 = (0..t).map(|k| m.pow(k)).sum();
            assert_eq!(node_count(m, t), Some(direct));
        }
    }
}

#[test]
fn plans_round_trip_and_validate() {
    for plan in [ExperimentPlan::desk(), ExperimentPlan::full(), tiny()] {
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(ExperimentPlan::from_json(&json).unwrap(), plan);
    }
    let desk = ExperimentPlan::desk();
    assert_eq!((desk.branches.clone(), desk.stages.clone(), desk.replications), (vec![2], vec![3, 4, 5, 6], 3));
    assert_eq!(desk.time_limit, 60.0);
    let mut bad = tiny();
    bad.gammas = vec![-0.1];
    assert!(bad.validate().is_err());
    let mut bad = tiny();
    bad.backend = Some("cplex".into());
    assert!(bad.validate().is_err());
    assert!(ExperimentPlan::from_json(r#"{"branches": [2]}"#).is_err());
}

#[test]
fn tiny_sweep_is_ordered_and_deterministic() {
    let plan = tiny();
    let a = run_sweep(&plan).unwrap();
    assert_eq!(a.rvats.len(), 2 * 2 * 2);
    assert_eq!(a.methods.len(), 2 * 2);
    for c in &a.rvats {
        assert!(c.error.is_none(), "{:?}", c.error);
        assert!(c.rvats_percent.unwrap() >= -1e-6);
        assert_eq!(c.nodes as u64, node_count(2, c.key.stages as u32).unwrap());
    }
    let tol = 1e-4;
    for m in &a.methods {
        let table = m.table.as_ref().unwrap();
        let ms = table.row("ms").unwrap().gain_percent.unwrap();
        let ats = table.row("ats").unwrap().gain_percent.unwrap();
        assert!(ms + tol >= ats);
        for h in ["ts-relax", "ms-relax", "ats-relax"] {
            let g = table.row(h).unwrap().gain_percent.unwrap();
            assert!(ats + tol >= g && g >= -tol, "{h}: {g} vs ats {ats}");
        }
    }
    // same seed across gamma levels and depths
    let seeds: Vec<u64> = a.rvats.iter().filter(|c| c.key.replication == 2).map(|c| c.key.seed).collect();
    assert!(seeds.iter().all(|&s| s == 6));

    let b = run_sweep(&plan).unwrap();
    assert_eq!(a.rvats_csv(), b.rvats_csv());
    assert_eq!(a.methods_csv(), b.methods_csv());

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    let rvats = std::fs::read_to_string(dir.path().join("rvats.csv")).unwrap();
    assert!(rvats.starts_with("M,T,gamma,replication,seed,nodes,v_ts,v_ats,rvats_percent,lower_bound,error\n"));
    assert_eq!(rvats.lines().count(), 1 + 8 + 4);
    let methods = std::fs::read_to_string(dir.path().join("methods.csv")).unwrap();
    assert_eq!(methods.lines().count(), 1 + 4 + 2);
    assert!(methods.lines().next().unwrap().contains("ats_relax_gap_percent"));
    let plans = std::fs::read_dir(dir.path().join("plans")).unwrap().count();
    assert_eq!(plans, 2 * 4);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["M2_T3_g0.01_r1"], 5);
    assert!(manifest["solver"]["backend"].is_string());
    assert!(manifest["crate_version"].is_string());
}

#[test]
fn failing_cells_do_not_stop_the_sweep() {
    let plan = ExperimentPlan {
        stages: vec![2, 40],
        gammas: vec![0.0],
        method_gamma: 0.0,
        replications: 1,
        ..tiny()
    };
    let res = run_sweep(&plan).unwrap();
    assert_eq!(res.rvats.len(), 2);
    assert!(res.rvats[0].error.is_none());
    assert!(res.rvats[1].error.as_deref().unwrap().contains("too large"));
    assert!(res.methods[1].table.is_none());
    let csv = res.methods_csv();
    assert!(csv.lines().nth(2).unwrap().starts_with("2,40,1,5,-,-"));
}
