//! Best-first branch and bound over the embedded simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::simplex::{solve_lp, LpStatus};
use crate::{ModelInstance, Solution, SolveError, SolverConfig, Status};

const INT_TOL: f64 = 1e-6;

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Most fractional integer column, lowest index on ties.
fn branching_column(model: &ModelInstance, x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in model.variables.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let frac = x[j] - x[j].floor();
        let dist = frac.min(1.0 - frac);
        if dist > INT_TOL && best.map_or(true, |(_, d)| dist > d + 1e-12) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

pub fn solve(model: &ModelInstance, config: &SolverConfig) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let mut lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    for (j, v) in model.variables.iter().enumerate() {
        if v.integer {
            lower[j] = (lower[j] - INT_TOL).ceil();
            upper[j] = (upper[j] + INT_TOL).floor();
            if lower[j] > upper[j] {
                return Ok(Solution::empty(Status::Infeasible, 0.0));
            }
        }
    }

    let root = solve_lp(model, &lower, &upper);
    match root.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(Solution::empty(Status::Infeasible, 0.0)),
        LpStatus::Unbounded => return Ok(Solution::empty(Status::Unbounded, 0.0)),
        LpStatus::IterationLimit => {
            return Err(SolveError::Numerical("simplex iteration limit at the root".into()))
        }
    }
    if !model.is_mip() {
        return Ok(Solution {
            status: Status::Optimal,
            objective: root.objective,
            bound: root.objective,
            values: root.x,
            seconds: 0.0,
        });
    }

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut pending = vec![(root.objective, root.x, lower, upper)];
    let mut timed_out = false;

    loop {
        // evaluate freshly solved nodes: either they are integral or they are queued
        for (obj, x, lo, up) in pending.drain(..) {
            if incumbent.as_ref().is_some_and(|(best, _)| obj >= *best) {
                continue;
            }
            match branching_column(model, &x) {
                None => incumbent = Some((obj, x)),
                Some(_) => {
                    seq += 1;
                    heap.push(Node {
                        bound: obj,
                        seq,
                        lower: lo,
                        upper: up,
                        x,
                    });
                }
            }
        }
        let best_bound = heap.peek().map_or(f64::INFINITY, |n| n.bound);
        if let Some((best, _)) = &incumbent {
            if best_bound >= *best || (*best - best_bound) <= config.gap * best.abs().max(1e-10) {
                break;
            }
        }
        let Some(node) = heap.pop() else {
            break;
        };
        if start.elapsed().as_secs_f64() > config.time_limit {
            heap.push(node);
            timed_out = true;
            break;
        }
        let j = branching_column(model, &node.x).expect("queued nodes are fractional");
        let down = node.x[j].floor();
        for (lo_j, up_j) in [(node.lower[j], down), (down + 1.0, node.upper[j])] {
            if lo_j > up_j {
                continue;
            }
            let mut lo = node.lower.clone();
            let mut up = node.upper.clone();
            lo[j] = lo_j;
            up[j] = up_j;
            let r = solve_lp(model, &lo, &up);
            match r.status {
                LpStatus::Optimal => pending.push((r.objective, r.x, lo, up)),
                LpStatus::Infeasible => {}
                LpStatus::Unbounded => return Ok(Solution::empty(Status::Unbounded, 0.0)),
                LpStatus::IterationLimit => {
                    return Err(SolveError::Numerical("simplex iteration limit in a subproblem".into()))
                }
            }
        }
    }

    let open_bound = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    match incumbent {
        Some((obj, x)) => Ok(Solution {
            status: if timed_out { Status::TimeLimit } else { Status::Optimal },
            objective: obj,
            bound: open_bound.min(obj),
            values: x,
            seconds: 0.0,
        }),
        None if timed_out => Ok(Solution::empty(Status::NoSolution, 0.0)),
        None => Ok(Solution::empty(Status::Infeasible, 0.0)),
    }
}
