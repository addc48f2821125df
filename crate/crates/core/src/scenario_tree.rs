//! Scenario trees: nodes in breadth-first stage order, per-node probabilities
//! and named numeric payloads, plus the random generator and the condensed
//! tree used by adaptive two-stage models.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TREE_FORMAT_VERSION: u32 = 1;
const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

/// On-disk representation of a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub version: u32,
    pub stage_count: usize,
    pub parents: Vec<Option<usize>>,
    pub probabilities: Vec<f64>,
    #[serde(default)]
    pub payloads: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    stage_count: usize,
    parent: Vec<Option<NodeId>>,
    stage: Vec<usize>,
    probability: Vec<f64>,
    children: Vec<Vec<NodeId>>,
    stage_nodes: Vec<Vec<NodeId>>,
    payloads: BTreeMap<String, Vec<f64>>,
}

impl ScenarioTree {
    /// Builds and validates a tree.
    ///
    /// Node 0 must be the only root, nodes must be numbered stage by stage,
    /// every leaf must sit in the last stage, stage probabilities must sum to
    /// one and each parent's probability must equal the sum over its children.
    pub fn new(
        parents: &[Option<usize>],
        probabilities: &[f64],
        payloads: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no nodes".into()));
        }
        if probabilities.len() != n {
            return Err(Error::InvalidTree(format!(
                "{} probabilities for {} nodes",
                probabilities.len(),
                n
            )));
        }
        if parents[0].is_some() {
            return Err(Error::InvalidTree("node 0 must be the root".into()));
        }
        let mut stage = vec![1usize; n];
        let mut children = vec![Vec::new(); n];
        for (k, p) in parents.iter().enumerate().skip(1) {
            let Some(p) = *p else {
                return Err(Error::InvalidTree(format!("node {k} is a second root")));
            };
            if p >= k {
                return Err(Error::InvalidTree(format!(
                    "node {k} has parent {p}; parents must precede their children"
                )));
            }
            stage[k] = stage[p] + 1;
            if stage[k] < stage[k - 1] {
                return Err(Error::InvalidTree(format!("node {k} breaks stage ordering")));
            }
            children[p].push(NodeId(k));
        }
        let stage_count = stage[n - 1];
        for k in 0..n {
            if children[k].is_empty() && stage[k] != stage_count {
                return Err(Error::InvalidTree(format!(
                    "leaf {k} is in stage {} but the tree has {stage_count} stages",
                    stage[k]
                )));
            }
        }
        for (k, &p) in probabilities.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidTree(format!("node {k} has probability {p}")));
            }
        }
        let mut stage_nodes = vec![Vec::new(); stage_count];
        for k in 0..n {
            stage_nodes[stage[k] - 1].push(NodeId(k));
        }
        for (t, nodes) in stage_nodes.iter().enumerate() {
            let total: f64 = nodes.iter().map(|m| probabilities[m.0]).sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidTree(format!(
                    "stage {} probabilities sum to {total}",
                    t + 1
                )));
            }
        }
        for k in 0..n {
            if children[k].is_empty() {
                continue;
            }
            let total: f64 = children[k].iter().map(|c| probabilities[c.0]).sum();
            if (total - probabilities[k]).abs() > PROB_TOL {
                return Err(Error::InvalidTree(format!(
                    "children of node {k} carry probability {total}, node has {}",
                    probabilities[k]
                )));
            }
        }
        for (name, values) in &payloads {
            if values.len() != n {
                return Err(Error::InvalidTree(format!(
                    "payload `{name}` has {} values for {n} nodes",
                    values.len()
                )));
            }
        }
        Ok(ScenarioTree {
            stage_count,
            parent: parents.iter().map(|p| p.map(NodeId)).collect(),
            stage,
            probability: probabilities.to_vec(),
            children,
            stage_nodes,
            payloads,
        })
    }

    /// Complete tree where every non-leaf node has `branches` children with
    /// equal conditional probability.
    pub fn uniform(branches: usize, stages: usize) -> Result<Self> {
        if branches == 0 || stages == 0 {
            return Err(Error::InvalidRange("branches and stages must be positive".into()));
        }
        let mut parents = vec![None];
        let mut probs = vec![1.0];
        let mut frontier = vec![0usize];
        for _ in 1..stages {
            let mut next = Vec::with_capacity(frontier.len() * branches);
            for &p in &frontier {
                for _ in 0..branches {
                    parents.push(Some(p));
                    probs.push(probs[p] / branches as f64);
                    next.push(parents.len() - 1);
                }
            }
            frontier = next;
        }
        ScenarioTree::new(&parents, &probs, BTreeMap::new())
    }

    pub fn from_file(file: &TreeFile) -> Result<Self> {
        if file.version != TREE_FORMAT_VERSION {
            return Err(Error::InvalidTree(format!(
                "unsupported tree format version {}",
                file.version
            )));
        }
        let tree = ScenarioTree::new(&file.parents, &file.probabilities, file.payloads.clone())?;
        if tree.stage_count != file.stage_count {
            return Err(Error::InvalidTree(format!(
                "file declares {} stages, structure has {}",
                file.stage_count, tree.stage_count
            )));
        }
        Ok(tree)
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile {
            version: TREE_FORMAT_VERSION,
            stage_count: self.stage_count,
            parents: self.parent.iter().map(|p| p.map(|q| q.0)).collect(),
            probabilities: self.probability.clone(),
            payloads: self.payloads.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TreeFile = serde_json::from_str(text)?;
        ScenarioTree::from_file(&file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ScenarioTree::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn stage_count(&self) -> usize {
        self.stage_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.len()).map(NodeId)
    }

    fn check(&self, n: NodeId) -> Result<()> {
        if n.0 < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidRange(format!("node {} does not exist", n.0)))
        }
    }

    fn check_stage(&self, t: usize) -> Result<()> {
        if (1..=self.stage_count).contains(&t) {
            Ok(())
        } else {
            Err(Error::InvalidRange(format!(
                "stage {t} outside 1..={}",
                self.stage_count
            )))
        }
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parent[n.0]
    }

    /// Stage of a node, counting the root as stage 1.
    pub fn stage(&self, n: NodeId) -> usize {
        self.stage[n.0]
    }

    pub fn probability(&self, n: NodeId) -> f64 {
        self.probability[n.0]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probability
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.children[n.0]
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.children[n.0].is_empty()
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.stage_nodes[self.stage_count - 1]
    }

    /// Nodes of stage `t`, in increasing order.
    pub fn nodes_in_stage(&self, t: usize) -> Result<&[NodeId]> {
        self.check_stage(t)?;
        Ok(&self.stage_nodes[t - 1])
    }

    /// Nodes from the root down to `n`, root first.
    pub fn path_to_root(&self, n: NodeId) -> Result<Vec<NodeId>> {
        self.check(n)?;
        let mut path = vec![n];
        let mut cur = n;
        while let Some(p) = self.parent[cur.0] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Ok(path)
    }

    /// `n` and its descendants with stage at most `t_end`, in increasing order.
    pub fn subtree(&self, n: NodeId, t_end: usize) -> Result<Vec<NodeId>> {
        self.check(n)?;
        let mut out = Vec::new();
        if t_end < self.stage[n.0] {
            return Ok(out);
        }
        let mut frontier = vec![n];
        while !frontier.is_empty() {
            out.extend_from_slice(&frontier);
            let mut next = Vec::new();
            for m in &frontier {
                if self.stage[m.0] < t_end {
                    next.extend_from_slice(&self.children[m.0]);
                }
            }
            frontier = next;
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Ancestor of `n` in stage `t` (`n` itself when `t` is its stage).
    pub fn ancestor_at(&self, n: NodeId, t: usize) -> Result<NodeId> {
        self.check(n)?;
        if t == 0 || t > self.stage[n.0] {
            return Err(Error::InvalidRange(format!(
                "stage {t} is not on the path of node {}",
                n.0
            )));
        }
        let mut cur = n;
        while self.stage[cur.0] > t {
            cur = self.parent[cur.0].expect("non-root nodes have parents");
        }
        Ok(cur)
    }

    pub fn payload(&self, field: &str) -> Result<&[f64]> {
        self.payloads
            .get(field)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownField(field.to_string()))
    }

    pub fn payloads(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.payloads
    }

    pub fn set_payload(&mut self, field: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let field = field.into();
        if values.len() != self.len() {
            return Err(Error::InvalidTree(format!(
                "payload `{field}` has {} values for {} nodes",
                values.len(),
                self.len()
            )));
        }
        self.payloads.insert(field, values);
        Ok(())
    }

    /// Maximum of `values` over each node's subtree.
    pub fn subtree_max(&self, values: &[f64]) -> Vec<f64> {
        let mut out = values.to_vec();
        for k in (1..self.len()).rev() {
            let p = self.parent[k].expect("non-root").0;
            if out[k] > out[p] {
                out[p] = out[k];
            }
        }
        out
    }

    /// Maximum of `values` along each node's root path.
    pub fn path_max(&self, values: &[f64]) -> Vec<f64> {
        let mut out = values.to_vec();
        for k in 1..self.len() {
            let p = self.parent[k].expect("non-root").0;
            if out[p] > out[k] {
                out[k] = out[p];
            }
        }
        out
    }
}

/// Settings for [`generate_tree`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeGenConfig {
    pub branches: usize,
    pub stages: usize,
    /// Payload names, one per demand component.
    pub fields: Vec<String>,
    /// Root value of each component.
    pub root_demand: Vec<f64>,
    /// Lower end of the growth multiplier for stages 2..=T.
    pub alpha_low: Vec<f64>,
    /// Upper end of the growth multiplier for stages 2..=T.
    pub alpha_high: Vec<f64>,
    pub seed: u64,
    /// Share one multiplier among all nodes of a stage with the same branch
    /// index instead of drawing one per node.
    #[serde(default)]
    pub shared_draws: bool,
}

impl TreeGenConfig {
    /// Multiplier ranges that widen with the stage:
    /// `[1 - gamma * t, 1.2 + gamma * t]`.
    pub fn with_gamma(
        branches: usize,
        stages: usize,
        fields: Vec<String>,
        root_demand: Vec<f64>,
        gamma: f64,
        seed: u64,
    ) -> Self {
        let alpha_low = (2..=stages).map(|t| 1.0 - gamma * t as f64).collect();
        let alpha_high = (2..=stages).map(|t| 1.2 + gamma * t as f64).collect();
        TreeGenConfig {
            branches,
            stages,
            fields,
            root_demand,
            alpha_low,
            alpha_high,
            seed,
            shared_draws: false,
        }
    }

    /// Same multiplier range at every stage.
    pub fn constant(
        branches: usize,
        stages: usize,
        fields: Vec<String>,
        root_demand: Vec<f64>,
        alpha_low: f64,
        alpha_high: f64,
        seed: u64,
    ) -> Self {
        let len = stages.saturating_sub(1);
        TreeGenConfig {
            branches,
            stages,
            fields,
            root_demand,
            alpha_low: vec![alpha_low; len],
            alpha_high: vec![alpha_high; len],
            seed,
            shared_draws: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.branches == 0 || self.stages == 0 {
            return Err(Error::InvalidConfig("branches and stages must be positive".into()));
        }
        if self.fields.len() != self.root_demand.len() || self.fields.is_empty() {
            return Err(Error::InvalidConfig(
                "need one root demand per field and at least one field".into(),
            ));
        }
        if self.alpha_low.len() != self.stages - 1 || self.alpha_high.len() != self.stages - 1 {
            return Err(Error::InvalidConfig(format!(
                "need {} multiplier ranges, one per stage after the first",
                self.stages - 1
            )));
        }
        for (t, (&lo, &hi)) in self.alpha_low.iter().zip(&self.alpha_high).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "stage {} multiplier range [{lo}, {hi}]",
                    t + 2
                )));
            }
        }
        let nodes = (0..self.stages).try_fold(0usize, |acc, t| {
            self.branches
                .checked_pow(t as u32)
                .and_then(|c| acc.checked_add(c))
        });
        match nodes {
            Some(n) if n <= 50_000_000 => Ok(()),
            _ => Err(Error::InvalidConfig("tree is too large".into())),
        }
    }
}

/// Random M-ary tree with multiplicative demand growth.
///
/// For a node with branch index `j` among its siblings, each demand component
/// is its parent's value times a multiplier drawn uniformly from the `j`-th of
/// `M` equal slices of `[alpha_low_t, alpha_high_t]`. Draws are taken stage by
/// stage, component by component, node by node from a ChaCha8 stream seeded
/// with `seed`.
pub fn generate_tree(config: &TreeGenConfig) -> Result<ScenarioTree> {
    config.validate()?;
    let m = config.branches;
    let base = ScenarioTree::uniform(m, config.stages)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut demand: Vec<Vec<f64>> = config.root_demand.iter().map(|&d| vec![d; base.len()]).collect();
    for t in 2..=config.stages {
        let (lo, hi) = (config.alpha_low[t - 2], config.alpha_high[t - 2]);
        let width = (hi - lo) / m as f64;
        let nodes = base.nodes_in_stage(t)?;
        for comp in demand.iter_mut() {
            let shared: Vec<f64> = if config.shared_draws {
                (0..m).map(|j| lo + width * (j as f64 + rng.random::<f64>())).collect()
            } else {
                Vec::new()
            };
            for &n in nodes {
                let parent = base.parent(n).expect("non-root").0;
                let j = (n.0 - 1) % m;
                let beta = if config.shared_draws {
                    shared[j]
                } else {
                    lo + width * (j as f64 + rng.random::<f64>())
                };
                comp[n.0] = beta * comp[parent];
            }
        }
    }
    let payloads = config.fields.iter().cloned().zip(demand).collect();
    let parents: Vec<Option<usize>> = base.parent.iter().map(|p| p.map(|q| q.0)).collect();
    ScenarioTree::new(&parents, base.probabilities(), payloads)
}

/// Maps every node to its cluster under revision time `t_star`.
///
/// Before `t_star` each stage is a single cluster; from `t_star` on, the
/// nodes of a stage that share a stage-`t_star` ancestor form one cluster.
/// Clusters are numbered stage by stage.
pub fn revision_clusters(tree: &ScenarioTree, t_star: usize) -> Result<(Vec<usize>, usize)> {
    tree.check_stage(t_star)?;
    let pre = t_star - 1;
    let anchors = tree.nodes_in_stage(t_star)?;
    let width = anchors.len();
    let mut anchor_pos = vec![usize::MAX; tree.len()];
    for (k, a) in anchors.iter().enumerate() {
        anchor_pos[a.0] = k;
    }
    let mut cluster = vec![0usize; tree.len()];
    for n in tree.nodes() {
        let t = tree.stage(n);
        cluster[n.0] = if t < t_star {
            t - 1
        } else {
            let a = tree.ancestor_at(n, t_star)?;
            pre + (t - t_star) * width + anchor_pos[a.0]
        };
    }
    let count = pre + width * (tree.stage_count() - t_star + 1);
    Ok((cluster, count))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedNode {
    pub stage: usize,
    pub parent: Option<usize>,
    pub cluster: Vec<NodeId>,
    /// Total probability of the cluster.
    pub probability: f64,
    /// Probability-weighted cost `sum p_m a_m` over the cluster; this is the
    /// objective coefficient of the merged decision.
    pub cost: f64,
    /// Largest requirement in the cluster.
    pub requirement: f64,
}

/// Tree obtained by merging the nodes that share a decision when the single
/// revision happens at `revision_time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub revision_time: usize,
    pub nodes: Vec<CondensedNode>,
    /// Cluster index of every node of the original tree.
    pub cluster_of: Vec<usize>,
}

impl CondensedTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cluster indices from the condensed root to `k`.
    pub fn path(&self, k: usize) -> Vec<usize> {
        let mut out = vec![k];
        let mut cur = k;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }
}

/// Condensed tree for revision time `t_star` with per-node `costs` and
/// `requirements` aggregated over each cluster.
pub fn condense(
    tree: &ScenarioTree,
    t_star: usize,
    costs: &[f64],
    requirements: &[f64],
) -> Result<CondensedTree> {
    if costs.len() != tree.len() || requirements.len() != tree.len() {
        return Err(Error::InvalidData(format!(
            "expected {} node values, got {} costs and {} requirements",
            tree.len(),
            costs.len(),
            requirements.len()
        )));
    }
    let (cluster_of, count) = revision_clusters(tree, t_star)?;
    let mut nodes: Vec<CondensedNode> = (0..count)
        .map(|_| CondensedNode {
            stage: 0,
            parent: None,
            cluster: Vec::new(),
            probability: 0.0,
            cost: 0.0,
            requirement: f64::NEG_INFINITY,
        })
        .collect();
    for n in tree.nodes() {
        let k = cluster_of[n.0];
        let node = &mut nodes[k];
        node.stage = tree.stage(n);
        node.parent = tree.parent(n).map(|p| cluster_of[p.0]);
        node.cluster.push(n);
        let p = tree.probability(n);
        node.probability += p;
        node.cost += p * costs[n.0];
        node.requirement = node.requirement.max(requirements[n.0]);
    }
    Ok(CondensedTree {
        revision_time: t_star,
        nodes,
        cluster_of,
    })
}

/// [`condense`] reading costs and requirements from payload fields.
pub fn condense_fields(
    tree: &ScenarioTree,
    t_star: usize,
    cost_field: &str,
    requirement_field: &str,
) -> Result<CondensedTree> {
    condense(
        tree,
        t_star,
        tree.payload(cost_field)?,
        tree.payload(requirement_field)?,
    )
}
