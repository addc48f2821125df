//! Stochastic capacity-expansion models over a scenario tree.
//!
//! Every builder shares one idea: the state variable `x_in` (capacity of
//! resource `i` acquired at node `n`) is either free per node (multi-stage),
//! shared per stage (two-stage), shared per revision cluster (adaptive with a
//! fixed revision time per resource) or tied together by big-M constraints
//! whose activation is chosen by binary revision variables (adaptive, joint).

use std::collections::HashMap;

use ats_lp::{ModelInstance, Sense, Solution, VarId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario_tree::{revision_clusters, NodeId, ScenarioTree};

/// How state decisions are shared across the nodes of the tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Structure {
    MultiStage,
    TwoStage,
    /// One revision time per resource.
    Fixed(Vec<usize>),
    /// Revision times chosen by the model, with one big-M per resource.
    Joint { x_upper: Vec<f64> },
}

impl Structure {
    pub fn label(&self) -> &'static str {
        match self {
            Structure::MultiStage => "ms",
            Structure::TwoStage => "ts",
            Structure::Fixed(_) => "ats-fixed",
            Structure::Joint { .. } => "ats-joint",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Make the state variables continuous.
    pub relax_state: bool,
    /// Make the revision indicators of the joint model continuous.
    pub relax_revisions: bool,
    /// Allow each resource to be acquired in at most one stage.
    pub single_period_acquisition: bool,
}

/// A model together with the variable maps needed to read its solutions.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub model: ModelInstance,
    pub structure: Structure,
    /// `x[i][n]`: state variable of resource `i` used at node `n`.
    pub x: Vec<Vec<VarId>>,
    /// `r[i][t-1]`: revision indicators of the joint model.
    pub r: Option<Vec<Vec<VarId>>>,
    /// Recourse variables per node; the layout is builder specific.
    pub y: Vec<Vec<VarId>>,
}

impl CompiledModel {
    /// State values `x[i][n]` of a solution.
    pub fn state_values(&self, sol: &Solution) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .map(|row| row.iter().map(|&v| sol.value(v)).collect())
            .collect()
    }

    /// Revision times implied by the indicators, `round(sum_t t r_it)`.
    pub fn revisions(&self, sol: &Solution) -> Option<Vec<usize>> {
        let r = self.r.as_ref()?;
        Some(
            r.iter()
                .map(|ri| {
                    let t: f64 = ri.iter().enumerate().map(|(k, &v)| (k + 1) as f64 * sol.value(v)).sum();
                    (t.round() as usize).clamp(1, ri.len())
                })
                .collect(),
        )
    }

    /// Makes every state variable continuous.
    pub fn relax_state(&mut self) {
        for row in &self.x {
            for &v in row {
                self.model.set_integer(v, false);
            }
        }
    }
}

/// Per-resource data for the shared state layer.
pub(crate) struct StateSpec<'a> {
    pub prefix: &'a str,
    /// `costs[i][n]`: cost per unit at node `n`, before probability weighting.
    pub costs: &'a [Vec<f64>],
    /// Upper bound of every single state variable of a resource.
    pub upper: &'a [f64],
    pub integer: bool,
}

pub(crate) struct StateVars {
    pub x: Vec<Vec<VarId>>,
    pub r: Option<Vec<Vec<VarId>>>,
}

/// Adds state variables, their objective terms and the structural
/// constraints of `structure`.
pub(crate) fn add_state(
    model: &mut ModelInstance,
    tree: &ScenarioTree,
    structure: &Structure,
    spec: &StateSpec<'_>,
    opts: &BuildOptions,
) -> Result<StateVars> {
    let resources = spec.costs.len();
    let t_max = tree.stage_count();
    let integer = spec.integer && !opts.relax_state;
    let revisions: Option<Vec<usize>> = match structure {
        Structure::TwoStage => Some(vec![1; resources]),
        Structure::Fixed(rv) => {
            if rv.len() != resources {
                return Err(Error::InvalidRange(format!(
                    "{} revision times for {resources} resources",
                    rv.len()
                )));
            }
            if let Some(&t) = rv.iter().find(|&&t| t == 0 || t > t_max) {
                return Err(Error::InvalidRange(format!("revision time {t} outside 1..={t_max}")));
            }
            Some(rv.clone())
        }
        _ => None,
    };

    let mut x = Vec::with_capacity(resources);
    let mut r = None;
    match (structure, revisions) {
        (_, Some(rv)) => {
            for i in 0..resources {
                let (cluster, count) = revision_clusters(tree, rv[i])?;
                let vars: Vec<VarId> = (0..count)
                    .map(|k| model.add_var(format!("{}_{i}_c{k}", spec.prefix), 0.0, spec.upper[i], integer))
                    .collect();
                for n in tree.nodes() {
                    model.add_cost(vars[cluster[n.0]], tree.probability(n) * spec.costs[i][n.0]);
                }
                x.push(cluster.iter().map(|&k| vars[k]).collect());
            }
        }
        (Structure::MultiStage, None) => {
            for i in 0..resources {
                let vars: Vec<VarId> = tree
                    .nodes()
                    .map(|n| {
                        let v = model.add_var(format!("{}_{i}_{}", spec.prefix, n.0), 0.0, spec.upper[i], integer);
                        model.add_cost(v, tree.probability(n) * spec.costs[i][n.0]);
                        v
                    })
                    .collect();
                x.push(vars);
            }
        }
        (Structure::Joint { x_upper }, None) => {
            if x_upper.len() != resources {
                return Err(Error::BadBigM(format!(
                    "{} big-M values for {resources} resources",
                    x_upper.len()
                )));
            }
            if let Some(m) = x_upper.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
                return Err(Error::BadBigM(format!("big-M value {m}")));
            }
            let mut all_r = Vec::with_capacity(resources);
            for i in 0..resources {
                let vars: Vec<VarId> = tree
                    .nodes()
                    .map(|n| {
                        let v = model.add_var(format!("{}_{i}_{}", spec.prefix, n.0), 0.0, spec.upper[i], integer);
                        model.add_cost(v, tree.probability(n) * spec.costs[i][n.0]);
                        v
                    })
                    .collect();
                let ri: Vec<VarId> = (1..=t_max)
                    .map(|t| model.add_var(format!("r_{i}_{t}"), 0.0, 1.0, !opts.relax_revisions))
                    .collect();
                model.add_constraint(format!("rsum_{i}"), ri.iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0);
                add_joint_links(model, tree, i, &vars, &ri, x_upper[i])?;
                x.push(vars);
                all_r.push(ri);
            }
            r = Some(all_r);
        }
        _ => unreachable!("structures with revision vectors are handled above"),
    }

    if opts.single_period_acquisition {
        for i in 0..resources {
            let bound = match structure {
                Structure::Joint { x_upper } => x_upper[i].min(spec.upper[i]),
                _ => spec.upper[i],
            };
            if !bound.is_finite() {
                return Err(Error::InvalidConfig(
                    "single-period acquisition needs a finite bound on every resource".into(),
                ));
            }
            let z: Vec<VarId> = (1..=t_max)
                .map(|t| model.add_binary(format!("z_{i}_{t}")))
                .collect();
            let mut seen = std::collections::HashSet::new();
            for n in tree.nodes() {
                let v = x[i][n.0];
                if seen.insert(v) {
                    let t = tree.stage(n);
                    model.add_constraint(
                        format!("once_{i}_{}", n.0),
                        [(v, 1.0), (z[t - 1], -bound)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
            model.add_constraint(format!("zsum_{i}"), z.iter().map(|&v| (v, 1.0)), Sense::Le, 1.0);
        }
    }
    Ok(StateVars { x, r })
}

/// Big-M pairs of the joint model for one resource.
///
/// Before the revision, nodes of a stage agree with the first node of the
/// stage. From the revision stage `t` on, nodes of stage `t'` below the same
/// stage-`t` node agree with the first of them.
fn add_joint_links(
    model: &mut ModelInstance,
    tree: &ScenarioTree,
    i: usize,
    x: &[VarId],
    r: &[VarId],
    big_m: f64,
) -> Result<()> {
    let t_max = tree.stage_count();
    for t in 1..t_max {
        let stage = tree.nodes_in_stage(t)?;
        let rep = stage[0];
        let later: Vec<(VarId, f64)> = r[t..].iter().map(|&v| (v, big_m)).collect();
        for &n in &stage[1..] {
            let mut up = vec![(x[n.0], 1.0), (x[rep.0], -1.0)];
            up.extend_from_slice(&later);
            model.add_constraint(format!("pre_{i}_{t}_{}_a", n.0), up, Sense::Le, big_m);
            let mut down = vec![(x[rep.0], 1.0), (x[n.0], -1.0)];
            down.extend_from_slice(&later);
            model.add_constraint(format!("pre_{i}_{t}_{}_b", n.0), down, Sense::Le, big_m);
        }
    }
    for t in 1..=t_max {
        let mut reps: HashMap<(NodeId, usize), NodeId> = HashMap::new();
        for n in tree.nodes() {
            let tn = tree.stage(n);
            if tn < t {
                continue;
            }
            let anchor = tree.ancestor_at(n, t)?;
            let rep = *reps.entry((anchor, tn)).or_insert(n);
            if rep == n {
                continue;
            }
            model.add_constraint(
                format!("post_{i}_{t}_{}_a", n.0),
                [(x[n.0], 1.0), (x[rep.0], -1.0), (r[t - 1], big_m)],
                Sense::Le,
                big_m,
            );
            model.add_constraint(
                format!("post_{i}_{t}_{}_b", n.0),
                [(x[rep.0], 1.0), (x[n.0], -1.0), (r[t - 1], big_m)],
                Sense::Le,
                big_m,
            );
        }
    }
    Ok(())
}

/// Sum of the state variables along the root path of `n`.
pub(crate) fn cumulative(tree: &ScenarioTree, x: &[VarId], n: NodeId, coef: f64) -> Vec<(VarId, f64)> {
    tree.path_to_root(n)
        .expect("node comes from the tree")
        .into_iter()
        .map(|m| (x[m.0], coef))
        .collect()
}

/// Value given per node, or a single value shared by every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerNode<T> {
    Each(Vec<T>),
    Same(T),
}

impl<T> PerNode<T> {
    pub fn get(&self, n: usize) -> &T {
        match self {
            PerNode::Same(v) => v,
            PerNode::Each(vs) => &vs[n],
        }
    }

    fn check_len(&self, nodes: usize, what: &str) -> Result<()> {
        match self {
            PerNode::Each(vs) if vs.len() != nodes => Err(Error::InvalidData(format!(
                "{what} has {} entries for {nodes} nodes",
                vs.len()
            ))),
            _ => Ok(()),
        }
    }

    fn all(&self) -> Box<dyn Iterator<Item = &T> + '_> {
        match self {
            PerNode::Same(v) => Box::new(std::iter::once(v)),
            PerNode::Each(vs) => Box::new(vs.iter()),
        }
    }
}

/// Data of the generic capacity-expansion model
///
/// ```text
/// min  sum_n p_n (a_n' x_n + b_n' y_n)
/// s.t. A_n y_n <= sum_{m on path(n)} x_m
///      B_n y_n >= d_n
///      x integer >= 0, y >= 0
/// ```
///
/// with an optional cap on the cumulative capacity of each resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityExpansionData {
    pub resources: usize,
    pub tasks: usize,
    pub items: usize,
    /// `a_n[i]`
    pub acquisition_cost: PerNode<Vec<f64>>,
    /// `b_n[j]`
    pub task_cost: PerNode<Vec<f64>>,
    /// `A_n[i][j]`
    pub usage: PerNode<Vec<Vec<f64>>>,
    /// `B_n[k][j]`
    pub coverage: PerNode<Vec<Vec<f64>>>,
    /// `d_n[k]`
    pub demand: PerNode<Vec<f64>>,
    /// Largest cumulative capacity of each resource.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_capacity: Option<Vec<f64>>,
}

impl CapacityExpansionData {
    pub fn validate(&self, tree: &ScenarioTree) -> Result<()> {
        let n = tree.len();
        self.acquisition_cost.check_len(n, "acquisition_cost")?;
        self.task_cost.check_len(n, "task_cost")?;
        self.usage.check_len(n, "usage")?;
        self.coverage.check_len(n, "coverage")?;
        self.demand.check_len(n, "demand")?;
        let bad = |what: &str| Err(Error::InvalidData(format!("{what} has the wrong shape")));
        for a in self.acquisition_cost.all() {
            if a.len() != self.resources {
                return bad("acquisition_cost");
            }
            if a.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::InvalidCosts("acquisition costs must be finite and nonnegative".into()));
            }
        }
        for b in self.task_cost.all() {
            if b.len() != self.tasks {
                return bad("task_cost");
            }
            if b.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::InvalidCosts("task costs must be finite and nonnegative".into()));
            }
        }
        for a in self.usage.all() {
            if a.len() != self.resources || a.iter().any(|row| row.len() != self.tasks) {
                return bad("usage");
            }
            if a.iter().flatten().any(|v| !v.is_finite()) {
                return bad("usage");
            }
        }
        for b in self.coverage.all() {
            if b.len() != self.items || b.iter().any(|row| row.len() != self.tasks) {
                return bad("coverage");
            }
            if b.iter().flatten().any(|v| !v.is_finite()) {
                return bad("coverage");
            }
        }
        for d in self.demand.all() {
            if d.len() != self.items || d.iter().any(|v| !v.is_finite()) {
                return bad("demand");
            }
        }
        if let Some(cap) = &self.max_capacity {
            if cap.len() != self.resources || cap.iter().any(|c| !(*c >= 0.0)) {
                return bad("max_capacity");
            }
        }
        Ok(())
    }

    /// Single-resource instance: one task per node that needs one unit of
    /// capacity per unit of demand, with free task cost.
    pub fn single_resource(costs: Vec<f64>, demand: Vec<f64>) -> Self {
        let cap = demand.iter().fold(0.0f64, |m, &d| m.max(d)).ceil();
        CapacityExpansionData {
            resources: 1,
            tasks: 1,
            items: 1,
            acquisition_cost: PerNode::Each(costs.into_iter().map(|c| vec![c]).collect()),
            task_cost: PerNode::Same(vec![0.0]),
            usage: PerNode::Same(vec![vec![1.0]]),
            coverage: PerNode::Same(vec![vec![1.0]]),
            demand: PerNode::Each(demand.into_iter().map(|d| vec![d]).collect()),
            max_capacity: Some(vec![cap]),
        }
    }
}

/// Problems whose first-stage-like decisions are capacity acquisitions that
/// can be structured by [`Structure`].
pub trait ExpansionProblem: Sync {
    fn resource_count(&self) -> usize;

    fn compile(&self, tree: &ScenarioTree, structure: &Structure, opts: &BuildOptions) -> Result<CompiledModel>;

    /// `a[i][n]`: cost per unit of resource `i` acquired at node `n`, before
    /// probability weighting.
    fn unit_costs(&self, tree: &ScenarioTree) -> Result<Vec<Vec<f64>>>;

    /// `delta[i][n]`: capacity of resource `i` that the recourse part of a
    /// solution uses at node `n`, net of any initial capacity.
    fn requirements(&self, tree: &ScenarioTree, compiled: &CompiledModel, sol: &Solution) -> Vec<Vec<f64>>;

    /// Default big-M of the joint model, one per resource.
    fn default_big_m(&self, tree: &ScenarioTree) -> Result<Vec<f64>>;
}

impl ExpansionProblem for CapacityExpansionData {
    fn resource_count(&self) -> usize {
        self.resources
    }

    fn compile(&self, tree: &ScenarioTree, structure: &Structure, opts: &BuildOptions) -> Result<CompiledModel> {
        self.validate(tree)?;
        let mut model = ModelInstance::new(format!("capex_{}", structure.label()));
        let costs = self.unit_costs(tree)?;
        let upper: Vec<f64> = match &self.max_capacity {
            Some(cap) => cap.clone(),
            None => vec![f64::INFINITY; self.resources],
        };
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
        let mut y = Vec::with_capacity(tree.len());
        for n in tree.nodes() {
            let p = tree.probability(n);
            let b = self.task_cost.get(n.0);
            let yn: Vec<VarId> = (0..self.tasks)
                .map(|j| {
                    let v = model.add_continuous(format!("y_{j}_{}", n.0), 0.0, f64::INFINITY);
                    model.add_cost(v, p * b[j]);
                    v
                })
                .collect();
            let a = self.usage.get(n.0);
            for i in 0..self.resources {
                let mut terms: Vec<(VarId, f64)> = (0..self.tasks).map(|j| (yn[j], a[i][j])).collect();
                terms.extend(cumulative(tree, &state.x[i], n, -1.0));
                model.add_constraint(format!("cap_{i}_{}", n.0), terms, Sense::Le, 0.0);
            }
            let bm = self.coverage.get(n.0);
            let d = self.demand.get(n.0);
            for k in 0..self.items {
                let terms: Vec<(VarId, f64)> = (0..self.tasks).map(|j| (yn[j], bm[k][j])).collect();
                model.add_constraint(format!("dem_{k}_{}", n.0), terms, Sense::Ge, d[k]);
            }
            if let Some(cap) = &self.max_capacity {
                if tree.is_leaf(n) {
                    for i in 0..self.resources {
                        model.add_constraint(
                            format!("capmax_{i}_{}", n.0),
                            cumulative(tree, &state.x[i], n, 1.0),
                            Sense::Le,
                            cap[i],
                        );
                    }
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
        self.validate(tree)?;
        Ok((0..self.resources)
            .map(|i| tree.nodes().map(|n| self.acquisition_cost.get(n.0)[i]).collect())
            .collect())
    }

    fn requirements(&self, tree: &ScenarioTree, compiled: &CompiledModel, sol: &Solution) -> Vec<Vec<f64>> {
        (0..self.resources)
            .map(|i| {
                tree.nodes()
                    .map(|n| {
                        let a = self.usage.get(n.0);
                        let used: f64 = (0..self.tasks).map(|j| a[i][j] * sol.value(compiled.y[n.0][j])).sum();
                        used.max(0.0)
                    })
                    .collect()
            })
            .collect()
    }

    fn default_big_m(&self, _tree: &ScenarioTree) -> Result<Vec<f64>> {
        self.max_capacity.clone().ok_or_else(|| {
            Error::BadBigM("no max_capacity given; pass explicit big-M values".into())
        })
    }
}

/// Multi-stage model.
pub fn build_multistage<P: ExpansionProblem + ?Sized>(tree: &ScenarioTree, data: &P) -> Result<CompiledModel> {
    data.compile(tree, &Structure::MultiStage, &BuildOptions::default())
}

/// Two-stage model: one decision per resource and stage.
pub fn build_twostage<P: ExpansionProblem + ?Sized>(tree: &ScenarioTree, data: &P) -> Result<CompiledModel> {
    data.compile(tree, &Structure::TwoStage, &BuildOptions::default())
}

/// Adaptive two-stage model with fixed revision times.
pub fn build_adaptive_fixed<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    data: &P,
    revisions: &[usize],
) -> Result<CompiledModel> {
    data.compile(tree, &Structure::Fixed(revisions.to_vec()), &BuildOptions::default())
}

/// Adaptive two-stage model choosing revision times, with big-M `x_upper`.
pub fn build_adaptive_joint<P: ExpansionProblem + ?Sized>(
    tree: &ScenarioTree,
    data: &P,
    x_upper: &[f64],
) -> Result<CompiledModel> {
    data.compile(
        tree,
        &Structure::Joint {
            x_upper: x_upper.to_vec(),
        },
        &BuildOptions::default(),
    )
}

/// Single-resource model `min sum p_n a_n x_n s.t. sum_{path(n)} x >= delta_n`.
///
/// Under a revision structure the decisions of a cluster are merged and only
/// the largest requirement of the cluster is kept.
pub fn build_single_resource(
    tree: &ScenarioTree,
    costs: &[f64],
    requirements: &[f64],
    structure: &Structure,
    opts: &BuildOptions,
) -> Result<CompiledModel> {
    if costs.len() != tree.len() || requirements.len() != tree.len() {
        return Err(Error::InvalidData("one cost and one requirement per node".into()));
    }
    if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidCosts("costs must be finite and nonnegative".into()));
    }
    if requirements.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidData("requirements must be finite".into()));
    }
    let top = requirements.iter().fold(0.0f64, |m, &d| m.max(d));
    if let Structure::Joint { x_upper } = structure {
        if x_upper.len() != 1 {
            return Err(Error::BadBigM("single-resource models take one big-M".into()));
        }
        if x_upper[0] < top.ceil() {
            return Err(Error::BadBigM(format!(
                "big-M {} is below the largest requirement {top}",
                x_upper[0]
            )));
        }
    }
    let mut model = ModelInstance::new(format!("single_{}", structure.label()));
    let cost_rows = vec![costs.to_vec()];
    let state = add_state(
        &mut model,
        tree,
        structure,
        &StateSpec {
            prefix: "x",
            costs: &cost_rows,
            upper: &[f64::INFINITY],
            integer: true,
        },
        opts,
    )?;
    let x = &state.x[0];
    // nodes whose root paths use the same variables need only their largest requirement
    let mut rows: HashMap<Vec<VarId>, (NodeId, f64)> = HashMap::new();
    let mut order = Vec::new();
    for n in tree.nodes() {
        let key: Vec<VarId> = tree.path_to_root(n)?.iter().map(|m| x[m.0]).collect();
        match rows.get_mut(&key) {
            Some(slot) => {
                if requirements[n.0] > slot.1 {
                    *slot = (n, requirements[n.0]);
                }
            }
            None => {
                rows.insert(key.clone(), (n, requirements[n.0]));
                order.push(key);
            }
        }
    }
    for key in order {
        let (n, d) = rows[&key];
        model.add_constraint(
            format!("req_{}", n.0),
            key.iter().map(|&v| (v, 1.0)),
            Sense::Ge,
            d,
        );
    }
    Ok(CompiledModel {
        model,
        structure: structure.clone(),
        x: state.x,
        r: state.r,
        y: Vec::new(),
    })
}
