//! Approximation algorithms for the adaptive two-stage model with revision
//! times as decisions, and the exact joint solve they are compared with.
//!
//! TS-Relax and MS-Relax pick each resource's revision time from the
//! closed-form bounds evaluated on requirements taken from an LP relaxation;
//! ATS-Relax reads them off the joint model with continuous capacities. All
//! three finish with one fixed-revision MILP.

use std::time::Instant;

use ats_lp::{solve, Solution, SolverConfig, Status};
use serde::{Deserialize, Serialize};

use crate::bounds::{relaxed_requirements, revision_bounds, revision_stats, rounding_residual, tree_stats};
use crate::error::{Error, Result};
use crate::formulations::{BuildOptions, CompiledModel, ExpansionProblem, Structure};
use crate::scenario_tree::ScenarioTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TsRelax,
    MsRelax,
    AtsRelax,
    Exact,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::TsRelax, Method::MsRelax, Method::AtsRelax, Method::Exact];

    pub fn label(self) -> &'static str {
        match self {
            Method::TsRelax => "ts-relax",
            Method::MsRelax => "ms-relax",
            Method::AtsRelax => "ats-relax",
            Method::Exact => "exact",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicResult {
    pub method: Method,
    pub revisions: Vec<usize>,
    /// Objective of the final adaptive solve.
    pub objective: f64,
    #[serde(default)]
    pub lower_bound: Option<f64>,
    /// `100 (objective - lower_bound) / objective`.
    #[serde(default)]
    pub gap_percent: Option<f64>,
    /// A priori bound on `objective - V^ATS`.
    #[serde(default)]
    pub guarantee: Option<f64>,
    /// Status of the final solve.
    pub status: String,
    pub seconds: f64,
}

/// `100 (num) / den`, zero when the denominator vanishes.
pub fn percent(num: f64, den: f64) -> f64 {
    if den.abs() < 1e-12 {
        0.0
    } else {
        100.0 * num / den
    }
}

fn with_lower_bound(mut r: HeuristicResult, lower: f64) -> HeuristicResult {
    let lower = lower.min(r.objective);
    r.lower_bound = Some(lower);
    r.gap_percent = Some(percent(r.objective - lower, r.objective.abs()).max(0.0));
    r
}

fn check_solution(sol: &Solution, what: &str) -> Result<()> {
    match sol.status {
        Status::Optimal | Status::TimeLimit if sol.status.has_solution() => Ok(()),
        Status::Infeasible => Err(Error::Infeasible(what.to_string())),
        s => Err(Error::SolverFailure(format!("{what} ended {s}"))),
    }
}

/// Solves the adaptive model with fixed revision times.
pub fn solve_fixed<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    revisions: &[usize],
    config: &SolverConfig,
) -> Result<(CompiledModel, Solution)> {
    let compiled = problem.compile(tree, &Structure::Fixed(revisions.to_vec()), &BuildOptions::default())?;
    let sol = solve(&compiled.model, config)?;
    check_solution(&sol, "fixed-revision model")?;
    Ok((compiled, sol))
}

/// Solves a model of the given structure to the configured tolerance.
pub fn solve_structure<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    structure: &Structure,
    config: &SolverConfig,
) -> Result<(CompiledModel, Solution)> {
    let compiled = problem.compile(tree, structure, &BuildOptions::default())?;
    let sol = solve(&compiled.model, config)?;
    check_solution(&sol, structure.label())?;
    Ok((compiled, sol))
}

fn candidate_stages(stages: usize) -> std::ops::RangeInclusive<usize> {
    if stages == 1 {
        1..=1
    } else {
        2..=stages
    }
}

/// Per-resource selection from the closed-form bounds. `score` maps the
/// bounds and the rounding term to a value to maximize.
fn select_by_bounds<P, F>(
    tree: &ScenarioTree,
    problem: &P,
    delta: &[Vec<f64>],
    score: F,
) -> Result<Vec<usize>>
where
    P: ExpansionProblem + ?Sized,
    F: Fn(&crate::bounds::RevisionBounds, f64) -> f64,
{
    let costs = problem.unit_costs(tree)?;
    let mut out = Vec::with_capacity(costs.len());
    for (a, d) in costs.iter().zip(delta) {
        let stats = tree_stats(tree, a, d)?;
        let mut best: Option<(usize, f64)> = None;
        for t in candidate_stages(tree.stage_count()) {
            let b = revision_bounds(&stats, &revision_stats(tree, a, d, t)?);
            let s = score(&b, rounding_residual(tree, t, d)? * a[0]);
            if best.map_or(true, |(_, v)| s > v) {
                best = Some((t, s));
            }
        }
        out.push(best.expect("at least one stage").0);
    }
    Ok(out)
}

fn finish(
    method: Method,
    revisions: Vec<usize>,
    sol: &Solution,
    start: Instant,
) -> HeuristicResult {
    HeuristicResult {
        method,
        revisions,
        objective: sol.objective,
        lower_bound: None,
        gap_percent: None,
        guarantee: None,
        status: sol.status.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Revision times maximizing the lower bound on the gain over the two-stage
/// model, with requirements from the two-stage LP relaxation.
pub fn ts_relax_revisions<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<Vec<usize>> {
    let (delta, _) = relaxed_requirements(tree, problem, &Structure::TwoStage, config)?;
    select_by_bounds(tree, problem, &delta, |b, rounding| b.ts_minus_ats.lower - rounding)
}

pub fn ts_relax<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<HeuristicResult> {
    let start = Instant::now();
    let revisions = ts_relax_revisions(tree, problem, config)?;
    let (_, sol) = solve_fixed(tree, problem, &revisions, config)?;
    Ok(finish(Method::TsRelax, revisions, &sol, start))
}

/// Revision times minimizing the upper bound on the loss against the
/// multi-stage model, with requirements from its LP relaxation. Also
/// returns the LP value.
pub fn ms_relax_revisions<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<(Vec<usize>, f64)> {
    let (delta, lp) = relaxed_requirements(tree, problem, &Structure::MultiStage, config)?;
    let rev = select_by_bounds(tree, problem, &delta, |b, rounding| -(b.ats_minus_ms.upper + rounding))?;
    Ok((rev, lp))
}

pub fn ms_relax<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<HeuristicResult> {
    let start = Instant::now();
    let (revisions, lp) = ms_relax_revisions(tree, problem, config)?;
    let (_, sol) = solve_fixed(tree, problem, &revisions, config)?;
    Ok(with_lower_bound(finish(Method::MsRelax, revisions, &sol, start), lp))
}

/// Outcome of the first step of ATS-Relax.
#[derive(Debug, Clone, PartialEq)]
pub struct AtsRelaxation {
    pub revisions: Vec<usize>,
    pub objective: f64,
    /// `delta[i][n]` of the relaxed solution.
    pub requirements: Vec<Vec<f64>>,
}

/// Solves the joint model with continuous capacities. With
/// `relax_revisions` the indicators are continuous too and the revision
/// times are rounded.
pub fn ats_relaxation<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
    relax_revisions: bool,
) -> Result<AtsRelaxation> {
    let x_upper = problem.default_big_m(tree)?;
    let opts = BuildOptions {
        relax_state: true,
        relax_revisions,
        ..Default::default()
    };
    let compiled = problem.compile(tree, &Structure::Joint { x_upper }, &opts)?;
    let sol = solve(&compiled.model, config)?;
    check_solution(&sol, "relaxed joint model")?;
    Ok(AtsRelaxation {
        revisions: compiled.revisions(&sol).expect("joint model has indicators"),
        objective: if sol.status == Status::Optimal { sol.objective } else { sol.bound },
        requirements: problem.requirements(tree, &compiled, &sol),
    })
}

pub fn ats_relax<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<HeuristicResult> {
    ats_relax_with(tree, problem, config, false)
}

/// [`ats_relax`] with a choice of relaxing the revision indicators as well.
pub fn ats_relax_with<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
    relax_revisions: bool,
) -> Result<HeuristicResult> {
    let start = Instant::now();
    let relax = ats_relaxation(tree, problem, config, relax_revisions)?;
    let costs = problem.unit_costs(tree)?;
    let mut guarantee = 0.0;
    for (i, &t) in relax.revisions.iter().enumerate() {
        guarantee += rounding_residual(tree, t, &relax.requirements[i])? * costs[i][0];
    }
    let (_, sol) = solve_fixed(tree, problem, &relax.revisions, config)?;
    let mut r = with_lower_bound(finish(Method::AtsRelax, relax.revisions, &sol, start), relax.objective);
    r.guarantee = Some(guarantee);
    Ok(r)
}

/// Solves the joint model with binary revision indicators.
pub fn exact_ats<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<HeuristicResult> {
    let start = Instant::now();
    let x_upper = problem.default_big_m(tree)?;
    let (compiled, sol) = solve_structure(tree, problem, &Structure::Joint { x_upper }, config)?;
    let revisions = compiled.revisions(&sol).expect("joint model has indicators");
    Ok(with_lower_bound(finish(Method::Exact, revisions, &sol, start), sol.bound))
}

pub fn run_method<P: ExpansionProblem + ?Sized>(
    method: Method,
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<HeuristicResult> {
    match method {
        Method::TsRelax => ts_relax(tree, problem, config),
        Method::MsRelax => ms_relax(tree, problem, config),
        Method::AtsRelax => ats_relax(tree, problem, config),
        Method::Exact => exact_ats(tree, problem, config),
    }
}

/// One row of a method comparison. Missing values mark solves that did not
/// finish within the time limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub objective: Option<f64>,
    pub gain_percent: Option<f64>,
    pub loss_percent: Option<f64>,
    pub gap_percent: Option<f64>,
    pub revisions: Option<Vec<usize>>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainLossTable {
    pub v_ts: f64,
    pub v_ms: f64,
    /// Rows in the order MS, ATS, TS-Relax, MS-Relax, ATS-Relax, TS.
    pub rows: Vec<MethodRow>,
    /// `100 (V^TS - V^ATS) / V^TS`, using the TS-Relax objective when the
    /// exact solve did not finish.
    pub rvats_percent: f64,
    /// Set when `rvats_percent` is computed from TS-Relax.
    pub rvats_is_lower_bound: bool,
}

impl GainLossTable {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Gain against the two-stage model and loss against the multi-stage model
/// for every method on one instance.
pub fn gain_loss_table<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    config: &SolverConfig,
) -> Result<GainLossTable> {
    let (_, ts) = solve_structure(tree, problem, &Structure::TwoStage, config)?;
    let (_, ms) = solve_structure(tree, problem, &Structure::MultiStage, config)?;
    let (v_ts, v_ms) = (ts.objective, ms.objective);
    let row = |method: &str, obj: f64, gap: Option<f64>, rev: Option<Vec<usize>>, status: String| MethodRow {
        method: method.to_string(),
        objective: Some(obj),
        gain_percent: Some(percent(v_ts - obj, v_ts.abs())),
        loss_percent: Some(percent(obj - v_ms, v_ms.abs())),
        gap_percent: gap,
        revisions: rev,
        status,
    };
    let mut rows = vec![row("ms", v_ms, None, None, ms.status.to_string())];
    // a time limit without any incumbent leaves the cell empty
    let exact = match exact_ats(tree, problem, config) {
        Ok(r) => Some(r),
        Err(Error::SolverFailure(_)) => None,
        Err(e) => return Err(e),
    };
    let optimal = Status::Optimal.to_string();
    let exact = exact.filter(|e| e.status == optimal);
    rows.push(if let Some(exact) = &exact {
        row("ats", exact.objective, None, Some(exact.revisions.clone()), exact.status.clone())
    } else {
        MethodRow {
            method: "ats".into(),
            objective: None,
            gain_percent: None,
            loss_percent: None,
            gap_percent: None,
            revisions: None,
            status: Status::TimeLimit.to_string(),
        }
    });
    let mut ts_relax_obj = v_ts;
    for m in [Method::TsRelax, Method::MsRelax, Method::AtsRelax] {
        let h = run_method(m, tree, problem, config)?;
        if m == Method::TsRelax {
            ts_relax_obj = h.objective;
        }
        rows.push(row(m.label(), h.objective, h.gap_percent, Some(h.revisions), h.status));
    }
    rows.push(row("ts", v_ts, None, None, ts.status.to_string()));
    let (v_ats, lower) = match &exact {
        Some(e) => (e.objective, false),
        None => (ts_relax_obj, true),
    };
    Ok(GainLossTable {
        v_ts,
        v_ms,
        rows,
        rvats_percent: percent(v_ts - v_ats, v_ts.abs()),
        rvats_is_lower_bound: lower,
    })
}
