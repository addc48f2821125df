use std::path::PathBuf;
use std::process::Command;

fn ats(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_ats")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "ats {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ats-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn tree_compile_solve_round_trip() {
    let dir = scratch("roundtrip");
    let tree = dir.join("tree.json");
    let lp = dir.join("ts.lp");
    let sol = dir.join("sol.json");
    let t = tree.to_str().unwrap();
    ats(&["tree", "generate", "--branches", "2", "--stages", "3", "--seed", "4", "-o", t]);
    assert!(ats(&["tree", "validate", t]).contains("7 nodes, 3 stages, 4 leaves"));
    ats(&["compile", "--formulation", "ts", "--tree", t, "-o", lp.to_str().unwrap()]);
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.starts_with("\\ Model: genexp_ts\nMinimize\n obj:"));
    assert!(text.ends_with("End\n"));

    let highs = ats(&["solve", lp.to_str().unwrap(), "--solution", sol.to_str().unwrap()]);
    let embedded = ats(&["solve", lp.to_str().unwrap(), "--backend", "embedded", "--gap", "1e-9"]);
    let objective = |s: &str| -> f64 {
        s.lines().find_map(|l| l.strip_prefix("objective ")).unwrap().parse().unwrap()
    };
    assert!(highs.starts_with("status optimal"));
    assert!((objective(&highs) - objective(&embedded)).abs() <= 1e-3 * objective(&embedded));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(doc["status"], "optimal");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bounds_and_heuristic_reports() {
    let dir = scratch("reports");
    let tree = dir.join("tree.json");
    let t = tree.to_str().unwrap();
    let demands = [27.0, 29.0, 19.0, 38.0, 21.0, 25.0, 32.0];
    let costs = [1.0; 7];
    let doc = serde_json::json!({
        "version": 1,
        "stage_count": 3,
        "parents": [null, 0, 0, 1, 1, 2, 2],
        "probabilities": [1.0, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25],
        "payloads": {"a": costs, "delta": demands},
    });
    std::fs::write(&tree, doc.to_string()).unwrap();
    let csv = dir.join("bounds.csv");
    let out = ats(&["bounds", "--tree", t, "--a", "a", "--delta", "delta", "--report", csv.to_str().unwrap()]);
    assert!(out.contains("delta* = 38"));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("quantity,t1,t2,t3\n"));

    let gen = dir.join("gen.json");
    ats(&["tree", "generate", "--stages", "3", "-o", gen.to_str().unwrap()]);
    let report = dir.join("h.json");
    ats(&["heuristic", "--method", "ts-relax", "--tree", gen.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    let h: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(h["method"], "ts-relax");
    assert_eq!(h["revisions"].as_array().unwrap().len(), 6);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn newsvendor_curve_and_bad_input() {
    let dir = scratch("newsvendor");
    let csv = dir.join("curve.csv");
    let out = ats(&["newsvendor", "--config", "1a", "--scenarios", "200", "-o", csv.to_str().unwrap()]);
    assert!(out.starts_with("best revision time"));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 5);

    let missing = Command::new(env!("CARGO_BIN_EXE_ats"))
        .args(["tree", "validate", dir.join("absent.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!missing.status.success());
    std::fs::remove_dir_all(dir).unwrap();
}
