//! Generation capacity expansion.
//!
//! Units of each generation type are bought at tree nodes and operated in a
//! few subperiods per stage (peak, shoulder, ...). Demand that the installed
//! fleet cannot cover is curtailed at a penalty. Costs are discounted to the
//! first stage and change deterministically from stage to stage by a yearly
//! trend factor.

use std::collections::{BTreeMap, HashSet};

use ats_lp::{ModelInstance, Sense, Solution, VarId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{add_state, cumulative, BuildOptions, CompiledModel, ExpansionProblem, StateSpec, Structure};
use crate::scenario_tree::{NodeId, ScenarioTree, TreeGenConfig};

/// Smallest acquisition reported in a plan.
const BUY_TOL: f64 = 1e-6;

const DEFAULT_DATA: &str = include_str!("../data/genexp_default.json");

/// Yearly relative change of each cost component, e.g. `-0.1` for a 10%
/// decrease per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostTrend {
    #[serde(default)]
    pub acquisition: f64,
    #[serde(default)]
    pub fixed_om: f64,
    #[serde(default)]
    pub fuel: f64,
    #[serde(default)]
    pub variable_om: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationType {
    pub name: String,
    /// Nuclear, coal and gas plants are capped at 20% growth over the
    /// initial fleet.
    #[serde(default)]
    pub traditional: bool,
    pub initial_units: u32,
    /// Largest fleet size allowed at the end of the horizon.
    pub max_units: u32,
    /// Nameplate capacity of one unit (MW).
    pub capacity_mw: f64,
    /// Capacity of one unit that can actually be dispatched (MW).
    pub effective_capacity_mw: f64,
    /// Share of the generation that counts towards demand.
    pub peak_contribution: f64,
    /// Per MW of nameplate capacity, in the first stage.
    pub acquisition_cost: f64,
    /// Per MW of nameplate capacity and year.
    pub fixed_om: f64,
    /// Per MWh.
    pub fuel_price: f64,
    /// Per MWh.
    pub variable_om: f64,
    #[serde(default)]
    pub trend: CostTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subperiod {
    pub name: String,
    /// Hours per year spent in the subperiod.
    pub hours: f64,
    /// Demand (MW) at the root.
    pub root_demand: f64,
}

/// Which values come from published sources and which are placeholders.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub published: Vec<String>,
    #[serde(default)]
    pub placeholder: Vec<String>,
    #[serde(default)]
    pub note: String,
}

/// Data of a generation expansion instance. Demand per subperiod is read from
/// the tree payload of the same name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenExpData {
    #[serde(default = "one")]
    pub version: u32,
    #[serde(default)]
    pub provenance: Provenance,
    /// Cost per MWh of curtailed demand.
    pub penalty: f64,
    pub interest_rate: f64,
    pub subperiods: Vec<Subperiod>,
    pub types: Vec<GenerationType>,
}

fn one() -> u32 {
    1
}

impl Default for GenExpData {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_DATA).expect("bundled dataset parses")
    }
}

impl GenExpData {
    pub fn from_json(text: &str) -> Result<Self> {
        let data: GenExpData = serde_json::from_str(text)?;
        data.check()?;
        Ok(data)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn subperiod_names(&self) -> Vec<String> {
        self.subperiods.iter().map(|s| s.name.clone()).collect()
    }

    /// Tree generator settings with multiplier ranges `[1 - gamma t, 1.2 + gamma t]`.
    pub fn tree_config(&self, branches: usize, stages: usize, gamma: f64, seed: u64) -> TreeGenConfig {
        TreeGenConfig::with_gamma(
            branches,
            stages,
            self.subperiod_names(),
            self.subperiods.iter().map(|s| s.root_demand).collect(),
            gamma,
            seed,
        )
    }

    /// Checks the data alone, without a tree.
    pub fn check(&self) -> Result<()> {
        if self.types.is_empty() || self.subperiods.is_empty() {
            return Err(Error::InvalidData("need at least one generation type and one subperiod".into()));
        }
        if !(self.interest_rate.is_finite() && self.interest_rate > -1.0) {
            return Err(Error::InvalidData(format!("interest rate {}", self.interest_rate)));
        }
        if !(self.penalty.is_finite() && self.penalty >= 0.0) {
            return Err(Error::InvalidCosts(format!("curtailment penalty {}", self.penalty)));
        }
        let mut names = HashSet::new();
        for s in &self.subperiods {
            if !names.insert(&s.name) {
                return Err(Error::InvalidData(format!("duplicate subperiod `{}`", s.name)));
            }
            if !(s.hours.is_finite() && s.hours >= 0.0 && s.root_demand.is_finite() && s.root_demand >= 0.0) {
                return Err(Error::InvalidData(format!("subperiod `{}` hours or demand", s.name)));
            }
        }
        for g in &self.types {
            let name = &g.name;
            if g.max_units < g.initial_units {
                return Err(Error::InvalidData(format!("`{name}`: max_units below initial_units")));
            }
            if g.traditional && g.max_units as f64 > 1.2 * g.initial_units as f64 + 1e-9 {
                return Err(Error::InvalidData(format!(
                    "`{name}`: traditional types may grow by at most 20%"
                )));
            }
            if !(g.capacity_mw > 0.0 && g.effective_capacity_mw > 0.0 && g.effective_capacity_mw <= g.capacity_mw) {
                return Err(Error::InvalidData(format!("`{name}`: capacities")));
            }
            if !(g.peak_contribution > 0.0 && g.peak_contribution <= 1.0) {
                return Err(Error::InvalidData(format!("`{name}`: peak contribution")));
            }
            let costs = [g.acquisition_cost, g.fixed_om, g.fuel_price, g.variable_om];
            if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::InvalidCosts(format!("`{name}`: costs must be finite and nonnegative")));
            }
            let t = g.trend;
            if [t.acquisition, t.fixed_om, t.fuel, t.variable_om]
                .iter()
                .any(|r| !(r.is_finite() && *r > -1.0))
            {
                return Err(Error::InvalidData(format!("`{name}`: trend factors must exceed -1")));
            }
        }
        Ok(())
    }

    /// Checks the data against a tree: every subperiod needs a payload.
    pub fn validate(&self, tree: &ScenarioTree) -> Result<()> {
        self.check()?;
        for s in &self.subperiods {
            let d = tree.payload(&s.name)?;
            if d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidData(format!("demand `{}` must be finite and nonnegative", s.name)));
            }
        }
        Ok(())
    }

    fn discount(&self, t: usize) -> f64 {
        (1.0 + self.interest_rate).powi(t as i32 - 1).recip()
    }

    fn grown(base: f64, rate: f64, t: usize) -> f64 {
        base * (1.0 + rate).powi(t as i32 - 1)
    }

    /// Cost of one unit of type `i` bought in stage `t` of a `stages`-stage
    /// horizon: acquisition plus fixed O&M until the end of the horizon, per
    /// MW, times the nameplate capacity, discounted to the first stage.
    pub fn unit_cost(&self, i: usize, t: usize, stages: usize) -> f64 {
        let g = &self.types[i];
        let om: f64 = (t..=stages)
            .map(|tau| Self::grown(g.fixed_om, g.trend.fixed_om, tau) / (1.0 + self.interest_rate).powi((tau - t) as i32))
            .sum();
        self.discount(t) * (Self::grown(g.acquisition_cost, g.trend.acquisition, t) + om) * g.capacity_mw
    }

    /// Discounted cost of one MW of generation of type `i` over subperiod `k`
    /// in stage `t`.
    pub fn generation_cost(&self, i: usize, k: usize, t: usize) -> f64 {
        let g = &self.types[i];
        let per_mwh = Self::grown(g.fuel_price, g.trend.fuel, t) + Self::grown(g.variable_om, g.trend.variable_om, t);
        self.discount(t) * per_mwh * self.subperiods[k].hours
    }

    /// Discounted cost of one MW of curtailed demand over subperiod `k` in
    /// stage `t`.
    pub fn curtailment_cost(&self, k: usize, t: usize) -> f64 {
        self.discount(t) * self.penalty * self.subperiods[k].hours
    }

    fn u_index(&self, i: usize, k: usize) -> usize {
        i * self.subperiods.len() + k
    }

    fn v_index(&self, k: usize) -> usize {
        self.types.len() * self.subperiods.len() + k
    }
}

impl ExpansionProblem for GenExpData {
    fn resource_count(&self) -> usize {
        self.types.len()
    }

    fn compile(&self, tree: &ScenarioTree, structure: &Structure, opts: &BuildOptions) -> Result<CompiledModel> {
        self.validate(tree)?;
        let costs = self.unit_costs(tree)?;
        let upper: Vec<f64> = self
            .types
            .iter()
            .map(|g| (g.max_units - g.initial_units) as f64)
            .collect();
        let mut model = ModelInstance::new(format!("genexp_{}", structure.label()));
        let state = add_state(
            &mut model,
            tree,
            structure,
            &StateSpec {
                prefix: "x",
                costs: &costs,
                upper: &upper,
                integer: true,
            },
            opts,
        )?;
        let demand: Vec<&[f64]> = self
            .subperiods
            .iter()
            .map(|s| tree.payload(&s.name))
            .collect::<Result<_>>()?;
        let kk = self.subperiods.len();
        let mut y = Vec::with_capacity(tree.len());
        for n in tree.nodes() {
            let p = tree.probability(n);
            let t = tree.stage(n);
            let mut yn = Vec::with_capacity(self.types.len() * kk + kk);
            for (i, g) in self.types.iter().enumerate() {
                for k in 0..kk {
                    let u = model.add_continuous(format!("u_{i}_{k}_{}", n.0), 0.0, f64::INFINITY);
                    model.add_cost(u, p * self.generation_cost(i, k, t));
                    let mut terms = vec![(u, 1.0 / g.effective_capacity_mw)];
                    terms.extend(cumulative(tree, &state.x[i], n, -1.0));
                    model.add_constraint(format!("cap_{i}_{k}_{}", n.0), terms, Sense::Le, g.initial_units as f64);
                    yn.push(u);
                }
            }
            for k in 0..kk {
                let v = model.add_continuous(format!("v_{k}_{}", n.0), 0.0, f64::INFINITY);
                model.add_cost(v, p * self.curtailment_cost(k, t));
                yn.push(v);
            }
            for k in 0..kk {
                let mut terms: Vec<(VarId, f64)> = self
                    .types
                    .iter()
                    .enumerate()
                    .map(|(i, g)| (yn[self.u_index(i, k)], g.peak_contribution))
                    .collect();
                terms.push((yn[self.v_index(k)], 1.0));
                model.add_constraint(format!("dem_{k}_{}", n.0), terms, Sense::Ge, demand[k][n.0]);
            }
            if tree.is_leaf(n) {
                for i in 0..self.types.len() {
                    model.add_constraint(
                        format!("units_{i}_{}", n.0),
                        cumulative(tree, &state.x[i], n, 1.0),
                        Sense::Le,
                        upper[i],
                    );
                }
            }
            y.push(yn);
        }
        Ok(CompiledModel {
            model,
            structure: structure.clone(),
            x: state.x,
            r: state.r,
            y,
        })
    }

    fn unit_costs(&self, tree: &ScenarioTree) -> Result<Vec<Vec<f64>>> {
        self.check()?;
        let stages = tree.stage_count();
        Ok((0..self.types.len())
            .map(|i| tree.nodes().map(|n| self.unit_cost(i, tree.stage(n), stages)).collect())
            .collect())
    }

    /// Units needed beyond the initial fleet to produce the generation of the
    /// solution: `max(0, max_k u_ikn / m'_i - n0_i)`.
    fn requirements(&self, tree: &ScenarioTree, compiled: &CompiledModel, sol: &Solution) -> Vec<Vec<f64>> {
        self.types
            .iter()
            .enumerate()
            .map(|(i, g)| {
                tree.nodes()
                    .map(|n| {
                        let peak = (0..self.subperiods.len())
                            .map(|k| sol.value(compiled.y[n.0][self.u_index(i, k)]))
                            .fold(0.0f64, f64::max);
                        (peak / g.effective_capacity_mw - g.initial_units as f64).max(0.0)
                    })
                    .collect()
            })
            .collect()
    }

    fn default_big_m(&self, _tree: &ScenarioTree) -> Result<Vec<f64>> {
        Ok(self.types.iter().map(|g| g.max_units as f64).collect())
    }
}

/// Compiles a generation expansion model with default options.
pub fn build_genexp(tree: &ScenarioTree, data: &GenExpData, structure: &Structure) -> Result<CompiledModel> {
    data.compile(tree, structure, &BuildOptions::default())
}

/// Objective split by cost component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub acquisition: f64,
    pub generation: f64,
    pub curtailment: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.acquisition + self.generation + self.curtailment
    }
}

/// Acquisitions decided at one node (or at the cluster it represents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanNode {
    pub node: usize,
    pub stage: usize,
    /// Units bought per type.
    pub units: BTreeMap<String, f64>,
    /// Effective capacity added per type (MW).
    pub effective_mw: BTreeMap<String, f64>,
}

/// Readable summary of an expansion solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPlanSummary {
    pub structure: String,
    /// Revision time per type, when the structure has one.
    pub revisions: Option<BTreeMap<String, usize>>,
    pub objective: f64,
    pub breakdown: CostBreakdown,
    /// Only nodes that buy something, or that sit at the revision time of a
    /// type that is bought somewhere. Nodes sharing all decisions with an
    /// earlier reported node are left out.
    pub nodes: Vec<PlanNode>,
    /// Units bought over the whole tree, weighted by probability.
    pub expected_units: BTreeMap<String, f64>,
}

/// Builds an [`ExpansionPlanSummary`] from a solved model.
pub fn extract_expansion_plan(
    tree: &ScenarioTree,
    data: &GenExpData,
    compiled: &CompiledModel,
    sol: &Solution,
) -> Result<ExpansionPlanSummary> {
    if compiled.x.len() != data.types.len() || compiled.y.len() != tree.len() {
        return Err(Error::InvalidData("model does not belong to this tree and dataset".into()));
    }
    let values = compiled.state_values(sol);
    let revisions: Option<Vec<usize>> = match &compiled.structure {
        Structure::MultiStage => None,
        Structure::TwoStage => Some(vec![1; data.types.len()]),
        Structure::Fixed(rv) => Some(rv.clone()),
        Structure::Joint { .. } => compiled.revisions(sol),
    };
    let costs = data.unit_costs(tree)?;
    let mut breakdown = CostBreakdown::default();
    for n in tree.nodes() {
        let p = tree.probability(n);
        let t = tree.stage(n);
        for i in 0..data.types.len() {
            breakdown.acquisition += p * costs[i][n.0] * values[i][n.0];
            for k in 0..data.subperiods.len() {
                breakdown.generation += p * data.generation_cost(i, k, t) * sol.value(compiled.y[n.0][data.u_index(i, k)]);
            }
        }
        for k in 0..data.subperiods.len() {
            breakdown.curtailment += p * data.curtailment_cost(k, t) * sol.value(compiled.y[n.0][data.v_index(k)]);
        }
    }

    let bought: Vec<bool> = values.iter().map(|row| row.iter().any(|&v| v > BUY_TOL)).collect();
    let mut seen = HashSet::new();
    let mut nodes = Vec::new();
    for n in tree.nodes() {
        let key: Vec<VarId> = compiled.x.iter().map(|row| row[n.0]).collect();
        let t = tree.stage(n);
        let at_revision = revisions
            .as_ref()
            .is_some_and(|rv| rv.iter().zip(&bought).any(|(&r, &b)| b && r == t));
        let buys = values.iter().any(|row| row[n.0] > BUY_TOL);
        if !(buys || at_revision) {
            continue;
        }
        if !seen.insert(key) {
            continue;
        }
        nodes.push(plan_node(data, &values, n, t));
    }

    let expected_units = data
        .types
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let e: f64 = tree.nodes().map(|n| tree.probability(n) * values[i][n.0]).sum();
            (g.name.clone(), e)
        })
        .collect();
    Ok(ExpansionPlanSummary {
        structure: compiled.structure.label().to_string(),
        revisions: revisions.map(|rv| data.types.iter().map(|g| g.name.clone()).zip(rv).collect()),
        objective: sol.objective,
        breakdown,
        nodes,
        expected_units,
    })
}

fn plan_node(data: &GenExpData, values: &[Vec<f64>], n: NodeId, t: usize) -> PlanNode {
    let units: BTreeMap<String, f64> = data
        .types
        .iter()
        .enumerate()
        .map(|(i, g)| (g.name.clone(), values[i][n.0] + 0.0))
        .collect();
    let effective_mw = data
        .types
        .iter()
        .map(|g| (g.name.clone(), units[&g.name] * g.effective_capacity_mw))
        .collect();
    PlanNode {
        node: n.0,
        stage: t,
        units,
        effective_mw,
    }
}
