//! Multi-period newsvendor with backorders, ordered under a static, an
//! adaptive (single revision) or a fully dynamic order-up-to policy.
//!
//! All policies are driven by critical fractiles
//! `(c_{t+1} - c_t + b_t) / (h_t + b_t)` applied to the distribution of
//! partial demand sums `D_{i,j} = d_i + ... + d_j`.

use std::io::Write;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::error::{Error, Result};

/// Demand distribution of one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Demand {
    Normal { mean: f64, std_dev: f64 },
    Uniform { low: f64, high: f64 },
    /// Equally likely observed values.
    Empirical { values: Vec<f64> },
}

impl Demand {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Demand::Normal { mean, std_dev } => mean.is_finite() && std_dev.is_finite() && *std_dev >= 0.0,
            Demand::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Demand::Empirical { values } => !values.is_empty() && values.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedDistribution(format!("invalid parameters in {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Demand::Normal { mean, std_dev } => {
                if *std_dev == 0.0 {
                    *mean
                } else {
                    Normal::new(*mean, *std_dev).expect("validated").sample(rng)
                }
            }
            Demand::Uniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.random_range(*low..*high)
                }
            }
            Demand::Empirical { values } => values[rng.random_range(0..values.len())],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Demand::Normal { mean, .. } => *mean,
            Demand::Uniform { low, high } => 0.5 * (low + high),
            Demand::Empirical { values } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

fn default_quantile_draws() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsvendorConfig {
    /// `c_t`; the cost after the horizon is zero.
    pub order_cost: Vec<f64>,
    /// `h_t`
    pub holding_cost: Vec<f64>,
    /// `b_t`
    pub backorder_cost: Vec<f64>,
    pub demand: Vec<Demand>,
    /// Clip sampled demands at zero.
    #[serde(default)]
    pub truncate_at_zero: bool,
    /// Sample size for quantiles of demand sums that have no closed form.
    #[serde(default = "default_quantile_draws")]
    pub quantile_draws: usize,
    #[serde(default)]
    pub quantile_seed: u64,
}

/// Number of scenarios and master seed of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Simulation {
    pub scenarios: usize,
    pub seed: u64,
}

impl NewsvendorConfig {
    /// Five periods, demand `N(10, 4^2)`, `c = 5`, `h = 2`, `b = 2` except a
    /// final backorder cost of `c_5 + 1`.
    pub fn stationary() -> Self {
        NewsvendorConfig {
            order_cost: vec![5.0; 5],
            holding_cost: vec![2.0; 5],
            backorder_cost: vec![2.0, 2.0, 2.0, 2.0, 6.0],
            demand: vec![
                Demand::Normal {
                    mean: 10.0,
                    std_dev: 4.0
                };
                5
            ],
            truncate_at_zero: false,
            quantile_draws: default_quantile_draws(),
            quantile_seed: 0,
        }
    }

    /// Stationary costs with mean demand growing by 2 per period from 10.
    pub fn increasing_demand() -> Self {
        let mut c = Self::stationary();
        c.demand = (0..5)
            .map(|t| Demand::Normal {
                mean: 10.0 + 2.0 * t as f64,
                std_dev: 4.0,
            })
            .collect();
        c
    }

    /// Stationary demand with `c_t = 4 + t`, `h_t = b_t = 1 + t` and a final
    /// backorder cost of `c_5 + 1`.
    pub fn increasing_costs() -> Self {
        let mut c = Self::stationary();
        c.order_cost = (1..=5).map(|t| 4.0 + t as f64).collect();
        c.holding_cost = (1..=5).map(|t| 1.0 + t as f64).collect();
        c.backorder_cost = (1..=5).map(|t| 1.0 + t as f64).collect();
        c.backorder_cost[4] = c.order_cost[4] + 1.0;
        c
    }

    pub fn horizon(&self) -> usize {
        self.order_cost.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t_max = self.horizon();
        if t_max == 0 {
            return Err(Error::InvalidConfig("empty horizon".into()));
        }
        if self.holding_cost.len() != t_max || self.backorder_cost.len() != t_max || self.demand.len() != t_max {
            return Err(Error::InvalidConfig("one cost triple and one demand per period".into()));
        }
        for d in &self.demand {
            d.validate()?;
        }
        let all = self.order_cost.iter().chain(&self.holding_cost).chain(&self.backorder_cost);
        if all.clone().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidCosts("costs must be finite and nonnegative".into()));
        }
        for t in 0..t_max {
            let (c, h, b) = (self.order_cost[t], self.holding_cost[t], self.backorder_cost[t]);
            if h + b <= 0.0 {
                return Err(Error::InvalidCosts(format!("period {}: h + b must be positive", t + 1)));
            }
            if t + 1 < t_max {
                let next = self.order_cost[t + 1];
                if next < c - b - 1e-12 || next > c + h + 1e-12 {
                    return Err(Error::InvalidCosts(format!(
                        "period {}: need c_t - b_t <= c_(t+1) <= c_t + h_t",
                        t + 1
                    )));
                }
            }
        }
        if self.backorder_cost[t_max - 1] < self.order_cost[t_max - 1] {
            return Err(Error::InvalidCosts("final backorder cost below final order cost".into()));
        }
        if self.quantile_draws == 0 {
            return Err(Error::InvalidConfig("quantile_draws must be positive".into()));
        }
        Ok(())
    }

    /// Critical fractile of period `t` (1-based).
    pub fn fractile(&self, t: usize) -> f64 {
        let c = self.order_cost[t - 1];
        let next = self.order_cost.get(t).copied().unwrap_or(0.0);
        let (h, b) = (self.holding_cost[t - 1], self.backorder_cost[t - 1]);
        ((next - c + b) / (h + b)).clamp(0.0, 1.0)
    }

    /// Quantile of `D_{i,j}` (1-based, inclusive).
    pub fn sum_quantile(&self, i: usize, j: usize, p: f64) -> Result<f64> {
        let parts = &self.demand[i - 1..j];
        let normal = !self.truncate_at_zero && parts.iter().all(|d| matches!(d, Demand::Normal { .. }));
        if normal {
            let (mut mean, mut var) = (0.0, 0.0);
            for d in parts {
                if let Demand::Normal { mean: m, std_dev: s } = d {
                    mean += m;
                    var += s * s;
                }
            }
            if var == 0.0 {
                return Ok(mean);
            }
            let dist = StatNormal::new(mean, var.sqrt())
                .map_err(|e| Error::UnsupportedDistribution(e.to_string()))?;
            return Ok(dist.inverse_cdf(p));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.quantile_seed);
        rng.set_stream(((i as u64) << 32) | j as u64);
        let mut draws: Vec<f64> = (0..self.quantile_draws)
            .map(|_| parts.iter().map(|d| self.draw(d, &mut rng)).sum())
            .collect();
        draws.sort_by(f64::total_cmp);
        let k = ((p * draws.len() as f64).ceil() as usize).clamp(1, draws.len()) - 1;
        Ok(draws[k])
    }

    fn draw<R: Rng + ?Sized>(&self, d: &Demand, rng: &mut R) -> f64 {
        let v = d.sample(rng);
        if self.truncate_at_zero {
            v.max(0.0)
        } else {
            v
        }
    }

    /// Demand path of scenario `k`, drawn from its own stream of the master
    /// seed so that every policy sees the same path.
    pub fn scenario(&self, seed: u64, k: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        self.demand.iter().map(|d| self.draw(d, &mut rng)).collect()
    }

    /// Cost of an order stream on one demand path.
    pub fn path_cost(&self, orders: &[f64], demand: &[f64]) -> f64 {
        let mut inv = 0.0;
        let mut cost = 0.0;
        for t in 0..self.horizon() {
            inv += orders[t] - demand[t];
            cost += self.order_cost[t] * orders[t]
                + self.holding_cost[t] * inv.max(0.0)
                + self.backorder_cost[t] * (-inv).max(0.0);
        }
        cost
    }
}

/// Order-up-to targets of the adaptive policy with revision time
/// `revision_time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub revision_time: usize,
    pub fractiles: Vec<f64>,
    /// Cumulative targets `X*_{1,t}` for `t < revision_time`.
    pub pre_targets: Vec<f64>,
    /// Quantiles `F_{t*,t}^{-1}(fractile_t)` for `t >= revision_time`; the
    /// cumulative post-revision target is this value minus the observed net
    /// inventory.
    pub post_quantiles: Vec<f64>,
}

fn finite_target(v: f64, t: usize) -> Result<f64> {
    if v == f64::INFINITY {
        Err(Error::InvalidCosts(format!("period {t}: critical fractile 1 gives an unbounded target")))
    } else {
        Ok(v)
    }
}

pub fn solve_policy(config: &NewsvendorConfig, revision_time: usize) -> Result<PolicyTable> {
    config.validate()?;
    let t_max = config.horizon();
    if revision_time == 0 || revision_time > t_max {
        return Err(Error::InvalidRange(format!("revision time {revision_time} outside 1..={t_max}")));
    }
    let fractiles: Vec<f64> = (1..=t_max).map(|t| config.fractile(t)).collect();
    let pre_targets = (1..revision_time)
        .map(|t| finite_target(config.sum_quantile(1, t, fractiles[t - 1])?, t))
        .collect::<Result<Vec<_>>>()?;
    let post_quantiles = (revision_time..=t_max)
        .map(|t| finite_target(config.sum_quantile(revision_time, t, fractiles[t - 1])?, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicyTable {
        revision_time,
        fractiles,
        pre_targets,
        post_quantiles,
    })
}

impl PolicyTable {
    pub fn horizon(&self) -> usize {
        self.fractiles.len()
    }

    /// Orders after the revision given the net inventory `s` observed at the
    /// revision time.
    pub fn post_orders(&self, s: f64) -> Vec<f64> {
        let mut placed = 0.0;
        self.post_quantiles
            .iter()
            .map(|q| {
                let x = (q - s - placed).max(0.0);
                placed += x;
                x
            })
            .collect()
    }
}

/// Orders of the adaptive policy. Only the demands before the revision time
/// are read from `observed`.
pub fn order_quantities(policy: &PolicyTable, observed: &[f64]) -> Result<Vec<f64>> {
    let pre = policy.revision_time - 1;
    if observed.len() < pre {
        return Err(Error::InvalidRange(format!(
            "need {pre} observed demands, got {}",
            observed.len()
        )));
    }
    let mut orders = Vec::with_capacity(policy.horizon());
    let mut placed = 0.0;
    for target in &policy.pre_targets {
        let x = (target - placed).max(0.0);
        placed += x;
        orders.push(x);
    }
    let s = placed - observed[..pre].iter().sum::<f64>();
    orders.extend(policy.post_orders(s));
    Ok(orders)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Static,
    Adaptive(usize),
    Dynamic,
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicyKind::Static => f.write_str("static"),
            PolicyKind::Adaptive(t) => write!(f, "adaptive({t})"),
            PolicyKind::Dynamic => f.write_str("dynamic"),
        }
    }
}

/// Monte Carlo estimate of an expected cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub scenarios: usize,
}

impl Estimate {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
            scenarios: samples.len(),
        }
    }
}

/// Per-period base-stock targets `F_{t,t}^{-1}(fractile_t)` of the dynamic
/// policy.
pub fn dynamic_targets(config: &NewsvendorConfig) -> Result<Vec<f64>> {
    config.validate()?;
    (1..=config.horizon())
        .map(|t| finite_target(config.sum_quantile(t, t, config.fractile(t))?, t))
        .collect()
}

/// Order stream and per-scenario evaluation shared by the policies.
enum Prepared {
    Adaptive(PolicyTable),
    Dynamic(Vec<f64>),
}

impl Prepared {
    fn new(config: &NewsvendorConfig, kind: PolicyKind) -> Result<Self> {
        Ok(match kind {
            PolicyKind::Static => Prepared::Adaptive(solve_policy(config, 1)?),
            PolicyKind::Adaptive(t) => Prepared::Adaptive(solve_policy(config, t)?),
            PolicyKind::Dynamic => Prepared::Dynamic(dynamic_targets(config)?),
        })
    }

    fn orders(&self, demand: &[f64]) -> Vec<f64> {
        match self {
            Prepared::Adaptive(p) => order_quantities(p, demand).expect("full path observed"),
            Prepared::Dynamic(targets) => {
                let mut inv = 0.0;
                targets
                    .iter()
                    .zip(demand)
                    .map(|(q, d)| {
                        let x = (q - inv).max(0.0);
                        inv += x - d;
                        x
                    })
                    .collect()
            }
        }
    }
}

fn sample_costs<F>(config: &NewsvendorConfig, sim: &Simulation, f: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if sim.scenarios == 0 {
        return Err(Error::InvalidConfig("at least one scenario is needed".into()));
    }
    let costs: Vec<f64> = (0..sim.scenarios)
        .into_par_iter()
        .map(|k| f(&config.scenario(sim.seed, k)))
        .collect();
    Ok(Estimate::from_samples(&costs))
}

/// Expected cost of a policy over `sim.scenarios` demand paths.
pub fn simulate(config: &NewsvendorConfig, kind: PolicyKind, sim: &Simulation) -> Result<Estimate> {
    let prepared = Prepared::new(config, kind)?;
    sample_costs(config, sim, |d| config.path_cost(&prepared.orders(d), d))
}

/// Expected cost of a fixed order schedule.
pub fn evaluate_orders(config: &NewsvendorConfig, orders: &[f64], sim: &Simulation) -> Result<Estimate> {
    config.validate()?;
    if orders.len() != config.horizon() {
        return Err(Error::InvalidRange("one order per period".into()));
    }
    sample_costs(config, sim, |d| config.path_cost(orders, d))
}

/// Expected cost from the revision time on, when the net inventory at that
/// point is `s` and the post-revision rule is followed.
pub fn post_revision_cost(config: &NewsvendorConfig, revision_time: usize, s: f64, sim: &Simulation) -> Result<Estimate> {
    let policy = solve_policy(config, revision_time)?;
    let start = revision_time - 1;
    let orders = policy.post_orders(s);
    sample_costs(config, sim, |d| {
        let mut inv = s;
        let mut cost = 0.0;
        for (k, x) in orders.iter().enumerate() {
            let t = start + k;
            inv += x - d[t];
            cost += config.order_cost[t] * x
                + config.holding_cost[t] * inv.max(0.0)
                + config.backorder_cost[t] * (-inv).max(0.0);
        }
        cost
    })
}

/// One point of a cost-versus-revision-time curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub policy: String,
    pub revision_time: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Policies that can be plotted against the revision time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvePolicy {
    Static,
    Adaptive,
    Dynamic,
}

impl std::str::FromStr for CurvePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "static" => Ok(CurvePolicy::Static),
            "adaptive" => Ok(CurvePolicy::Adaptive),
            "dynamic" => Ok(CurvePolicy::Dynamic),
            other => Err(Error::InvalidConfig(format!("unknown policy `{other}`"))),
        }
    }
}

impl CurvePolicy {
    pub fn label(self) -> &'static str {
        match self {
            CurvePolicy::Static => "static",
            CurvePolicy::Adaptive => "adaptive",
            CurvePolicy::Dynamic => "dynamic",
        }
    }
}

/// Costs of each policy at every revision time in `revisions`. Static and
/// dynamic costs do not depend on the revision time and are repeated.
pub fn simulate_curve(
    config: &NewsvendorConfig,
    policies: &[CurvePolicy],
    revisions: RangeInclusive<usize>,
    sim: &Simulation,
) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for &p in policies {
        let fixed = match p {
            CurvePolicy::Static => Some(simulate(config, PolicyKind::Static, sim)?),
            CurvePolicy::Dynamic => Some(simulate(config, PolicyKind::Dynamic, sim)?),
            CurvePolicy::Adaptive => None,
        };
        for t in revisions.clone() {
            let e = match fixed {
                Some(e) => e,
                None => simulate(config, PolicyKind::Adaptive(t), sim)?,
            };
            out.push(CurvePoint {
                policy: p.label().to_string(),
                revision_time: t,
                mean: e.mean,
                std_error: e.std_error,
            });
        }
    }
    Ok(out)
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Revision time with the lowest adaptive cost, earliest on ties.
pub fn best_revision_time(points: &[CurvePoint]) -> Option<usize> {
    points
        .iter()
        .filter(|p| p.policy == "adaptive")
        .fold(None::<&CurvePoint>, |best, p| match best {
            Some(b) if b.mean <= p.mean => Some(b),
            _ => Some(p),
        })
        .map(|p| p.revision_time)
}
