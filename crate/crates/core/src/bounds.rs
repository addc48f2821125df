//! Closed-form tree statistics, the interval bounds on the value of a single
//! revision for the single-resource problem, revision-time selection rules
//! and the capacity-expansion gap bounds built on top of them.

use std::io::Write;

use ats_lp::{solve, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{build_single_resource, BuildOptions, ExpansionProblem, Structure};
use crate::scenario_tree::{condense, ScenarioTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Smallest node cost.
    pub a_min: f64,
    /// Largest node cost.
    pub a_max: f64,
    /// Largest requirement.
    pub delta_max: f64,
    /// Expected value over leaves of the largest requirement on the path.
    pub delta_bar: f64,
}

/// Statistics of the tree split at a revision stage `t`: costs before `t`
/// (minus side) and from `t` on (plus side), and the requirement measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevisionStats {
    pub t: usize,
    pub a_minus_min: f64,
    pub a_minus_max: f64,
    pub a_plus_min: f64,
    pub a_plus_max: f64,
    /// Largest requirement before stage `t` (zero when `t = 1`).
    pub delta_minus: f64,
    /// Expected largest requirement seen by a stage-`t` node, counting the
    /// common history before `t` and its own subtree.
    pub delta_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevisionBounds {
    pub stats: RevisionStats,
    /// Interval containing `v^T - v^R(t)`.
    pub ts_minus_ats: Interval,
    /// Interval containing `v^R(t) - v^M`.
    pub ats_minus_ms: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub tree: TreeStats,
    pub per_revision: Vec<RevisionBounds>,
}

fn check_values(tree: &ScenarioTree, a: &[f64], delta: &[f64]) -> Result<()> {
    if a.len() != tree.len() || delta.len() != tree.len() {
        return Err(Error::InvalidData(format!(
            "expected {} node values, got {} costs and {} requirements",
            tree.len(),
            a.len(),
            delta.len()
        )));
    }
    if a.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidCosts("costs must be finite and nonnegative".into()));
    }
    if delta.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidData("requirements must be finite and nonnegative".into()));
    }
    Ok(())
}

pub fn tree_stats(tree: &ScenarioTree, a: &[f64], delta: &[f64]) -> Result<TreeStats> {
    check_values(tree, a, delta)?;
    let a_min = a.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta_max = delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let path_max = tree.path_max(delta);
    let delta_bar = tree
        .leaves()
        .iter()
        .map(|n| tree.probability(*n) * path_max[n.0])
        .sum();
    Ok(TreeStats {
        a_min,
        a_max,
        delta_max,
        delta_bar,
    })
}

/// [`tree_stats`] over payload fields.
pub fn compute_tree_stats(tree: &ScenarioTree, a_field: &str, delta_field: &str) -> Result<TreeStats> {
    tree_stats(tree, tree.payload(a_field)?, tree.payload(delta_field)?)
}

fn revision_stats_with(tree: &ScenarioTree, a: &[f64], delta: &[f64], sub_max: &[f64], t: usize) -> Result<RevisionStats> {
    let stages = tree.stage_count();
    if t == 0 || t > stages {
        return Err(Error::InvalidRange(format!("revision stage {t} outside 1..={stages}")));
    }
    let (mut am_lo, mut am_hi, mut ap_lo, mut ap_hi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut delta_minus = 0.0f64;
    for n in tree.nodes() {
        let c = a[n.0];
        if tree.stage(n) < t {
            am_lo = am_lo.min(c);
            am_hi = am_hi.max(c);
            delta_minus = delta_minus.max(delta[n.0]);
        } else {
            ap_lo = ap_lo.min(c);
            ap_hi = ap_hi.max(c);
        }
    }
    if t == 1 {
        // nothing precedes the root; the minus side carries no weight since delta_minus = 0
        am_lo = ap_lo;
        am_hi = ap_hi;
    }
    let delta_plus = tree
        .nodes_in_stage(t)?
        .iter()
        .map(|j| tree.probability(*j) * delta_minus.max(sub_max[j.0]))
        .sum();
    Ok(RevisionStats {
        t,
        a_minus_min: am_lo,
        a_minus_max: am_hi,
        a_plus_min: ap_lo,
        a_plus_max: ap_hi,
        delta_minus,
        delta_plus,
    })
}

pub fn revision_stats(tree: &ScenarioTree, a: &[f64], delta: &[f64], t: usize) -> Result<RevisionStats> {
    check_values(tree, a, delta)?;
    revision_stats_with(tree, a, delta, &tree.subtree_max(delta), t)
}

/// [`revision_stats`] over payload fields.
pub fn compute_revision_stats(tree: &ScenarioTree, a_field: &str, delta_field: &str, t: usize) -> Result<RevisionStats> {
    revision_stats(tree, tree.payload(a_field)?, tree.payload(delta_field)?, t)
}

/// Interval bounds for one revision stage.
pub fn revision_bounds(stats: &TreeStats, rs: &RevisionStats) -> RevisionBounds {
    let ts_minus_ats = Interval {
        lower: stats.a_min * stats.delta_max
            - (rs.a_minus_max - rs.a_plus_max) * rs.delta_minus
            - rs.a_plus_max * rs.delta_plus,
        upper: stats.a_max * stats.delta_max
            - (rs.a_minus_min - rs.a_plus_min) * rs.delta_minus
            - rs.a_plus_min * rs.delta_plus,
    };
    let ats_minus_ms = Interval {
        lower: (rs.a_minus_min - rs.a_plus_min) * rs.delta_minus + rs.a_plus_min * rs.delta_plus
            - stats.a_max * stats.delta_bar,
        upper: (rs.a_minus_max - rs.a_plus_max) * rs.delta_minus + rs.a_plus_max * rs.delta_plus
            - stats.a_min * stats.delta_bar,
    };
    RevisionBounds {
        stats: *rs,
        ts_minus_ats,
        ats_minus_ms,
    }
}

/// Bounds for every revision stage `1..=T`.
pub fn bounds_report(tree: &ScenarioTree, a: &[f64], delta: &[f64]) -> Result<BoundsReport> {
    let stats = tree_stats(tree, a, delta)?;
    let sub_max = tree.subtree_max(delta);
    let per_revision = (1..=tree.stage_count())
        .map(|t| revision_stats_with(tree, a, delta, &sub_max, t).map(|rs| revision_bounds(&stats, &rs)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsReport {
        tree: stats,
        per_revision,
    })
}

impl BoundsReport {
    /// Writes one row per quantity and one column per revision stage.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["quantity".to_string()];
        header.extend(self.per_revision.iter().map(|b| format!("t{}", b.stats.t)));
        w.write_record(&header)?;
        type Getter = fn(&RevisionBounds) -> f64;
        let rows: [(&str, Getter); 5] = [
            ("vT_minus_vR_lower", |b| b.ts_minus_ats.lower),
            ("vT_minus_vR_upper", |b| b.ts_minus_ats.upper),
            ("vR_minus_vM_lower", |b| b.ats_minus_ms.lower),
            ("vR_minus_vM_upper", |b| b.ats_minus_ms.upper),
            ("delta_plus", |b| b.stats.delta_plus),
        ];
        for (name, get) in rows {
            let mut rec = vec![name.to_string()];
            rec.extend(self.per_revision.iter().map(|b| format!("{}", get(b))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn argmin_from_two(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (t, v) in values {
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((t, v));
        }
    }
    best.map(|(t, _)| t)
}

/// Demand-based revision stage: the stage in `2..=T` with the smallest
/// `delta_plus`, earliest on ties.
pub fn select_t_db(tree: &ScenarioTree, delta: &[f64]) -> Result<usize> {
    let t_max = tree.stage_count();
    if t_max < 2 {
        return Err(Error::InvalidRange("needs at least two stages".into()));
    }
    let zeros = vec![0.0; tree.len()];
    check_values(tree, &zeros, delta)?;
    let sub_max = tree.subtree_max(delta);
    let values = (2..=t_max)
        .map(|t| revision_stats_with(tree, &zeros, delta, &sub_max, t).map(|rs| (t, rs.delta_plus)))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin_from_two(values.into_iter()).expect("non-empty range"))
}

/// Cost-based revision stage: the stage in `2..=T` with the smallest maximum
/// cost before it, earliest on ties.
pub fn select_t_cb(tree: &ScenarioTree, a: &[f64]) -> Result<usize> {
    let t_max = tree.stage_count();
    if t_max < 2 {
        return Err(Error::InvalidRange("needs at least two stages".into()));
    }
    let zeros = vec![0.0; tree.len()];
    check_values(tree, a, &zeros)?;
    let sub_max = tree.subtree_max(&zeros);
    let values = (2..=t_max)
        .map(|t| revision_stats_with(tree, a, &zeros, &sub_max, t).map(|rs| (t, rs.a_minus_max)))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin_from_two(values.into_iter()).expect("non-empty range"))
}

/// `ceil(x) - x`, treating values within `1e-9` of an integer as integral.
pub fn round_up_gap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        0.0
    } else {
        x.ceil() - x
    }
}

/// Largest rounding gap `ceil(d) - d` over the condensed tree of revision
/// stage `t`, where each merged node carries the largest requirement of its
/// cluster.
pub fn rounding_residual(tree: &ScenarioTree, t: usize, delta: &[f64]) -> Result<f64> {
    let zeros = vec![0.0; tree.len()];
    let ct = condense(tree, t, &zeros, delta)?;
    Ok(ct
        .nodes
        .iter()
        .map(|n| round_up_gap(n.requirement))
        .fold(0.0, f64::max))
}

/// LP values of the single-resource subproblem for one resource: two-stage,
/// adaptive at `t` and multi-stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemValues {
    pub two_stage: f64,
    pub adaptive: f64,
    pub multi_stage: f64,
    pub residual: f64,
    pub root_cost: f64,
}

/// Solves the LP relaxations of the single-resource subproblem.
pub fn subproblem_values(
    tree: &ScenarioTree,
    costs: &[f64],
    delta: &[f64],
    t: usize,
    config: &SolverConfig,
) -> Result<SubproblemValues> {
    let lp = |structure: Structure| -> Result<f64> {
        let opts = BuildOptions {
            relax_state: true,
            ..Default::default()
        };
        let m = build_single_resource(tree, costs, delta, &structure, &opts)?;
        let s = solve(&m.model, config)?;
        if !s.status.has_solution() {
            return Err(Error::SolverFailure(format!("single-resource LP ended {}", s.status)));
        }
        Ok(s.objective)
    };
    Ok(SubproblemValues {
        two_stage: lp(Structure::TwoStage)?,
        adaptive: lp(Structure::Fixed(vec![t]))?,
        multi_stage: lp(Structure::MultiStage)?,
        residual: rounding_residual(tree, t, delta)?,
        root_cost: costs[0],
    })
}

/// Which comparison a capacity-expansion gap bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapSide {
    /// Lower bound on `V^TS - V^ATS(t*)`, from the two-stage LP relaxation.
    TwoStageGain,
    /// Upper bound on `V^ATS(t*) - V^MS`, from the multi-stage LP relaxation.
    MultiStageLoss,
}

/// Requirements `delta[i][n]` implied by an LP relaxation of `structure`.
pub fn relaxed_requirements<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    structure: &Structure,
    config: &SolverConfig,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let compiled = problem.compile(tree, structure, &BuildOptions::default())?;
    let relaxed = compiled.model.relaxed();
    let sol = solve(&relaxed, config)?;
    if !sol.status.has_solution() {
        return Err(Error::SolverFailure(format!("LP relaxation ended {}", sol.status)));
    }
    Ok((problem.requirements(tree, &compiled, &sol), sol.objective))
}

/// Gap bound for a capacity-expansion problem with revision times
/// `revisions`, summed over resources.
pub fn capex_gap_bound<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    problem: &P,
    revisions: &[usize],
    side: GapSide,
    config: &SolverConfig,
) -> Result<f64> {
    if revisions.len() != problem.resource_count() {
        return Err(Error::InvalidRange(format!(
            "{} revision times for {} resources",
            revisions.len(),
            problem.resource_count()
        )));
    }
    let structure = match side {
        GapSide::TwoStageGain => Structure::TwoStage,
        GapSide::MultiStageLoss => Structure::MultiStage,
    };
    let (delta, _) = relaxed_requirements(tree, problem, &structure, config)?;
    let costs = problem.unit_costs(tree)?;
    let mut total = 0.0;
    for (i, &t) in revisions.iter().enumerate() {
        let v = subproblem_values(tree, &costs[i], &delta[i], t, config)?;
        total += match side {
            GapSide::TwoStageGain => v.two_stage - v.adaptive - v.residual * v.root_cost,
            GapSide::MultiStageLoss => v.adaptive - v.multi_stage + v.residual * v.root_cost,
        };
    }
    Ok(total)
}
