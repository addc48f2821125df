//! Generation expansion experiments: the value of adaptive two-stage
//! solutions across tree shapes and variability levels, and the comparison
//! of solution methods.
//!
//! A sweep runs one cell per (branches, stages, gamma, replication). Cells
//! run on a worker pool and are merged by cell key, so outputs do not depend
//! on completion order. A failing cell is recorded with its error and does
//! not stop the sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ats_lp::{Backend, SolverConfig, Status};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::Structure;
use crate::genexp::{extract_expansion_plan, ExpansionPlanSummary, GenExpData};
use crate::heuristics::{exact_ats, gain_loss_table, percent, solve_fixed, solve_structure, ts_relax, GainLossTable};
use crate::scenario_tree::{generate_tree, ScenarioTree};

/// `(M^T - 1) / (M - 1)`, the node count of a full `M`-ary tree with `T`
/// stages. `None` on overflow.
pub fn node_count(branches: u64, stages: u32) -> Option<u64> {
    if branches == 1 {
        return Some(stages as u64);
    }
    let power = branches.checked_pow(stages)?;
    Some((power - 1) / (branches - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub branches: Vec<usize>,
    pub stages: Vec<usize>,
    /// Variability levels of the RVATS sweep.
    pub gammas: Vec<f64>,
    /// Variability level at which all methods are compared.
    pub method_gamma: f64,
    pub replications: usize,
    /// Replication `k` (from 0) uses tree seed `base_seed + k` for every
    /// shape and variability level, so trees of growing depth are nested.
    pub base_seed: u64,
    /// Seconds per solve.
    pub time_limit: f64,
    /// Relative MIP gap.
    pub gap: f64,
    /// Worker threads; 0 uses every core.
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub backend: Option<String>,
    /// Dataset; the bundled placeholder data when absent.
    #[serde(default)]
    pub data: Option<GenExpData>,
}

fn one() -> usize {
    1
}

impl ExperimentPlan {
    /// Two-branch trees with 3 to 6 stages, three replications, 60 s per
    /// solve.
    pub fn desk() -> Self {
        ExperimentPlan {
            branches: vec![2],
            stages: (3..=6).collect(),
            gammas: vec![0.0, 0.005, 0.01],
            method_gamma: 0.005,
            replications: 3,
            base_seed: 1,
            time_limit: 60.0,
            gap: 1e-3,
            workers: 1,
            backend: None,
            data: None,
        }
    }

    /// Two- and three-branch trees up to 29524 nodes with two hours per
    /// solve.
    pub fn full() -> Self {
        ExperimentPlan {
            branches: vec![2, 3],
            stages: (3..=10).collect(),
            time_limit: 7200.0,
            ..Self::desk()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() || self.stages.is_empty() || self.gammas.is_empty() || self.replications == 0 {
            return Err(Error::InvalidConfig("empty plan".into()));
        }
        if self.branches.contains(&0) || self.stages.contains(&0) {
            return Err(Error::InvalidConfig("branches and stages must be positive".into()));
        }
        if self.gammas.iter().chain([&self.method_gamma]).any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidConfig("gamma must be finite and nonnegative".into()));
        }
        if !(self.time_limit > 0.0 && self.gap >= 0.0) {
            return Err(Error::InvalidConfig("time limit and gap".into()));
        }
        self.solver()?;
        if let Some(d) = &self.data {
            d.check()?;
        }
        Ok(())
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let mut config = SolverConfig::default().with_gap(self.gap).with_time_limit(self.time_limit);
        if let Some(b) = &self.backend {
            config = config.with_backend(b.parse::<Backend>().map_err(Error::InvalidConfig)?);
        }
        Ok(config)
    }

    fn gammas_with_method(&self) -> Vec<f64> {
        let mut g = self.gammas.clone();
        if !g.contains(&self.method_gamma) {
            g.push(self.method_gamma);
        }
        g
    }

    /// Cells in output order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &branches in &self.branches {
            for &stages in &self.stages {
                for gamma in self.gammas_with_method() {
                    for replication in 1..=self.replications {
                        out.push(CellKey {
                            branches,
                            stages,
                            gamma,
                            replication,
                            seed: self.base_seed + replication as u64 - 1,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub branches: usize,
    pub stages: usize,
    pub gamma: f64,
    /// From 1.
    pub replication: usize,
    pub seed: u64,
}

impl CellKey {
    fn label(&self) -> String {
        format!("M{}_T{}_g{}_r{}", self.branches, self.stages, self.gamma, self.replication)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvatsCell {
    pub key: CellKey,
    pub nodes: usize,
    pub v_ts: Option<f64>,
    pub v_ats: Option<f64>,
    pub rvats_percent: Option<f64>,
    /// `V^ATS` is the TS-Relax objective because the exact solve did not
    /// finish, so the RVATS value is a lower bound.
    pub lower_bound: bool,
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCell {
    pub key: CellKey,
    pub table: Option<GainLossTable>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendViolation {
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub plan: ExperimentPlan,
    pub rvats: Vec<RvatsCell>,
    pub methods: Vec<MethodCell>,
    /// Adaptive and two-stage plans of the method cells, by file stem.
    pub plans: BTreeMap<String, ExpansionPlanSummary>,
    pub trend_violations: Vec<TrendViolation>,
    pub seconds: f64,
}

struct CellOutput {
    rvats: RvatsCell,
    method: Option<MethodCell>,
    plans: Vec<(String, ExpansionPlanSummary)>,
}

fn run_cell(key: CellKey, plan: &ExperimentPlan, data: &GenExpData, config: &SolverConfig) -> CellOutput {
    let start = Instant::now();
    let is_method = key.gamma == plan.method_gamma;
    let mut rvats = RvatsCell {
        key,
        nodes: 0,
        v_ts: None,
        v_ats: None,
        rvats_percent: None,
        lower_bound: false,
        error: None,
        seconds: 0.0,
    };
    let mut method = is_method.then(|| MethodCell {
        key,
        table: None,
        error: None,
    });
    let mut plans = Vec::new();
    let outcome = (|| -> Result<()> {
        let tree = generate_tree(&data.tree_config(key.branches, key.stages, key.gamma, key.seed))?;
        rvats.nodes = tree.len();
        if let Some(m) = method.as_mut() {
            let table = gain_loss_table(&tree, data, config)?;
            rvats.v_ts = Some(table.v_ts);
            rvats.lower_bound = table.rvats_is_lower_bound;
            rvats.rvats_percent = Some(table.rvats_percent);
            rvats.v_ats = ["ats", "ts-relax"]
                .iter()
                .find_map(|m| table.row(m).and_then(|r| r.objective));
            plans = cell_plans(&key, &tree, data, &table, config)?;
            m.table = Some(table);
        } else {
            let (_, ts) = solve_structure(&tree, data, &Structure::TwoStage, config)?;
            let exact = match exact_ats(&tree, data, config) {
                Ok(r) if r.status == Status::Optimal.to_string() => Some(r.objective),
                Ok(_) | Err(Error::SolverFailure(_)) => None,
                Err(e) => return Err(e),
            };
            let (v_ats, lower) = match exact {
                Some(v) => (v, false),
                None => (ts_relax(&tree, data, config)?.objective, true),
            };
            rvats.v_ts = Some(ts.objective);
            rvats.v_ats = Some(v_ats);
            rvats.lower_bound = lower;
            rvats.rvats_percent = Some(percent(ts.objective - v_ats, ts.objective.abs()));
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        rvats.error = Some(e.to_string());
        if let Some(m) = method.as_mut() {
            m.error = Some(e.to_string());
        }
    }
    rvats.seconds = start.elapsed().as_secs_f64();
    CellOutput { rvats, method, plans }
}

/// Plans of the best adaptive solution found and of the two-stage solution.
fn cell_plans(
    key: &CellKey,
    tree: &ScenarioTree,
    data: &GenExpData,
    table: &GainLossTable,
    config: &SolverConfig,
) -> Result<Vec<(String, ExpansionPlanSummary)>> {
    let best = table
        .rows
        .iter()
        .filter(|r| matches!(r.method.as_str(), "ats" | "ts-relax" | "ms-relax" | "ats-relax"))
        .filter_map(|r| Some((r.objective?, r.revisions.clone()?)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    if let Some((_, revisions)) = best {
        let (compiled, sol) = solve_fixed(tree, data, &revisions, config)?;
        out.push((format!("{}_ats", key.label()), extract_expansion_plan(tree, data, &compiled, &sol)?));
    }
    let (compiled, sol) = solve_structure(tree, data, &Structure::TwoStage, config)?;
    out.push((format!("{}_ts", key.label()), extract_expansion_plan(tree, data, &compiled, &sol)?));
    Ok(out)
}

/// Runs every cell of `plan`.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<SweepResults> {
    plan.validate()?;
    let start = Instant::now();
    let data = plan.data.clone().unwrap_or_default();
    let config = plan.solver()?;
    let cells = plan.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let outputs: Vec<CellOutput> = pool.install(|| {
        cells
            .par_iter()
            .map(|&key| run_cell(key, plan, &data, &config))
            .collect()
    });
    let mut rvats = Vec::with_capacity(outputs.len());
    let mut methods = Vec::new();
    let mut plans = BTreeMap::new();
    for out in outputs {
        rvats.push(out.rvats);
        methods.extend(out.method);
        plans.extend(out.plans);
    }
    let trend_violations = trend_violations(&rvats);
    Ok(SweepResults {
        plan: plan.clone(),
        rvats,
        methods,
        plans,
        trend_violations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Empirical trends that are expected but not guaranteed: more variability
/// and more branches should not lower RVATS.
pub fn trend_violations(cells: &[RvatsCell]) -> Vec<TrendViolation> {
    let value = |m: usize, t: usize, g: f64, r: usize| {
        cells
            .iter()
            .find(|c| c.key.branches == m && c.key.stages == t && c.key.gamma == g && c.key.replication == r)
            .and_then(|c| c.rvats_percent)
    };
    let mut out = Vec::new();
    let max_gamma = cells.iter().map(|c| c.key.gamma).fold(f64::NEG_INFINITY, f64::max);
    let min_gamma = cells.iter().map(|c| c.key.gamma).fold(f64::INFINITY, f64::min);
    for c in cells.iter().filter(|c| c.key.gamma == max_gamma && max_gamma > min_gamma) {
        let k = c.key;
        if let (Some(hi), Some(lo)) = (c.rvats_percent, value(k.branches, k.stages, min_gamma, k.replication)) {
            if hi < lo {
                out.push(TrendViolation {
                    check: "variability".into(),
                    detail: format!(
                        "M={} T={} rep {}: RVATS {hi:.4}% at gamma {max_gamma} below {lo:.4}% at gamma {min_gamma}",
                        k.branches, k.stages, k.replication
                    ),
                });
            }
        }
    }
    for c in cells.iter().filter(|c| c.key.branches == 3) {
        let k = c.key;
        if let (Some(three), Some(two)) = (c.rvats_percent, value(2, k.stages, k.gamma, k.replication)) {
            if three < two {
                out.push(TrendViolation {
                    check: "branches".into(),
                    detail: format!(
                        "T={} gamma {} rep {}: RVATS {three:.4}% with 3 branches below {two:.4}% with 2",
                        k.stages, k.gamma, k.replication
                    ),
                });
            }
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(
        || "-".to_string(),
        |x| {
            // values that round to zero print without a sign
            let text = format!("{x:.4}");
            if text == "-0.0000" {
                "0.0000".to_string()
            } else {
                text
            }
        },
    )
}

fn mean(values: &[Option<f64>]) -> Option<f64> {
    let v: Option<Vec<f64>> = values.iter().copied().collect();
    let v = v?;
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl SweepResults {
    /// One row per cell and one `mean` row per (M, T, gamma). Dashes mark
    /// missing values.
    pub fn rvats_csv(&self) -> String {
        let mut s = String::from("M,T,gamma,replication,seed,nodes,v_ts,v_ats,rvats_percent,lower_bound,error\n");
        let mut groups: BTreeMap<(usize, usize, String), Vec<&RvatsCell>> = BTreeMap::new();
        for c in &self.rvats {
            let k = c.key;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                k.branches,
                k.stages,
                k.gamma,
                k.replication,
                k.seed,
                c.nodes,
                cell(c.v_ts),
                cell(c.v_ats),
                cell(c.rvats_percent),
                c.lower_bound,
                c.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
            groups.entry((k.branches, k.stages, format!("{}", k.gamma))).or_default().push(c);
        }
        for ((m, t, g), cs) in groups {
            let col = |f: fn(&RvatsCell) -> Option<f64>| mean(&cs.iter().map(|c| f(c)).collect::<Vec<_>>());
            let _ = writeln!(
                s,
                "{m},{t},{g},mean,-,{},{},{},{},{},",
                cs[0].nodes,
                cell(col(|c| c.v_ts)),
                cell(col(|c| c.v_ats)),
                cell(col(|c| c.rvats_percent)),
                cs.iter().any(|c| c.lower_bound),
            );
        }
        s
    }

    /// Method comparison with one row per cell and one `mean` row per
    /// (M, T).
    pub fn methods_csv(&self) -> String {
        const COLS: [(&str, &str); 12] = [
            ("ms", "gain"),
            ("ats", "gain"),
            ("ats", "loss"),
            ("ts-relax", "gain"),
            ("ts-relax", "loss"),
            ("ms-relax", "gain"),
            ("ms-relax", "loss"),
            ("ms-relax", "gap"),
            ("ats-relax", "gain"),
            ("ats-relax", "loss"),
            ("ats-relax", "gap"),
            ("ts", "loss"),
        ];
        let mut s = String::from("M,T,replication,seed");
        for (m, what) in &COLS {
            let _ = write!(s, ",{}_{}_percent", m.replace('-', "_"), what);
        }
        s.push_str(",error\n");
        let value = |c: &MethodCell, m: &str, what: &str| -> Option<f64> {
            let row = c.table.as_ref()?.row(m)?;
            match what {
                "gain" => row.gain_percent,
                "loss" => row.loss_percent,
                "gap" => row.gap_percent,
                _ => None,
            }
        };
        let mut groups: BTreeMap<(usize, usize), Vec<&MethodCell>> = BTreeMap::new();
        for c in &self.methods {
            let _ = write!(s, "{},{},{},{}", c.key.branches, c.key.stages, c.key.replication, c.key.seed);
            for (m, what) in &COLS {
                let _ = write!(s, ",{}", cell(value(c, m, what)));
            }
            let _ = writeln!(s, ",{}", c.error.as_deref().unwrap_or("").replace([',', '\n'], ";"));
            groups.entry((c.key.branches, c.key.stages)).or_default().push(c);
        }
        for ((m_, t), cs) in groups {
            let _ = write!(s, "{m_},{t},mean,-");
            for (m, what) in &COLS {
                let _ = write!(s, ",{}", cell(mean(&cs.iter().map(|c| value(c, m, what)).collect::<Vec<_>>())));
            }
            s.push_str(",\n");
        }
        s
    }

    /// Writes `rvats.csv`, `methods.csv`, `plans/*.json` and `manifest.json`
    /// into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("plans"))?;
        std::fs::write(dir.join("rvats.csv"), self.rvats_csv())?;
        std::fs::write(dir.join("methods.csv"), self.methods_csv())?;
        for (name, plan) in &self.plans {
            std::fs::write(dir.join("plans").join(format!("{name}.json")), serde_json::to_string_pretty(plan)?)?;
        }
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest()?)?)?;
        Ok(())
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let config = self.plan.solver()?;
        Ok(Manifest {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            solver: SolverInfo {
                backend: config.backend.to_string(),
                gap: config.gap,
                time_limit: config.time_limit,
                threads: config.threads,
            },
            plan: self.plan.clone(),
            seeds: self.rvats.iter().map(|c| (c.key.label(), c.key.seed)).collect(),
            cell_seconds: self.rvats.iter().map(|c| (c.key.label(), c.seconds)).collect(),
            failed_cells: self
                .rvats
                .iter()
                .filter_map(|c| Some((c.key.label(), c.error.clone()?)))
                .collect(),
            trend_violations: self.trend_violations.clone(),
            seconds: self.seconds,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub backend: String,
    pub gap: f64,
    pub time_limit: f64,
    pub threads: u32,
}

/// Record of a sweep run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub solver: SolverInfo,
    pub plan: ExperimentPlan,
    pub seeds: BTreeMap<String, u64>,
    pub cell_seconds: BTreeMap<String, f64>,
    pub failed_cells: BTreeMap<String, String>,
    pub trend_violations: Vec<TrendViolation>,
    pub seconds: f64,
}
