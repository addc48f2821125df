//! Dense bounded-variable primal simplex with a two-phase start.

use crate::model::{ModelInstance, Sense};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

/// How an original column maps onto nonnegative internal columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// x = offset + c
    Shift { col: usize, offset: f64 },
    /// x = offset - c
    Mirror { col: usize, offset: f64 },
    /// x = c_pos - c_neg
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    n: usize,
    /// row-major m x n
    t: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    beta: Vec<f64>,
    d: Vec<f64>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.n + j]
    }

    fn reprice(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.n..(i + 1) * self.n];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.t[r * n + q];
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for a in row.iter_mut() {
                *a /= piv;
            }
        }
        let prow: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + q];
            if f != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                for (a, &p) in row.iter_mut().zip(&prow) {
                    *a -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (dj, &p) in self.d.iter_mut().zip(&prow) {
                *dj -= f * p;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Runs primal simplex iterations for the current reduced costs.
    fn optimize(&mut self, max_iter: usize) -> LpStatus {
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.n {
                if self.is_basic[j] || self.blocked[j] {
                    continue;
                }
                let dj = self.d[j];
                let gain = if self.at_upper[j] { dj } else { -dj };
                if gain > COST_TOL {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if gain > best {
                        best = gain;
                        enter = Some(j);
                    }
                }
            }
            let Some(q) = enter else {
                return LpStatus::Optimal;
            };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_mag = 0.0;
            for i in 0..self.m {
                let alpha = dir * self.at(i, q);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (limit, to_upper) = if alpha > 0.0 {
                    (self.beta[i].max(0.0) / alpha, false)
                } else {
                    let ub = self.upper[b];
                    if ub == f64::INFINITY {
                        continue;
                    }
                    ((ub - self.beta[i]).max(0.0) / -alpha, true)
                };
                let better = match leave {
                    None => limit < theta || (limit == theta && theta.is_finite()),
                    Some((li, _)) => {
                        if limit < theta - 1e-12 {
                            true
                        } else if limit <= theta + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                alpha.abs() > leave_mag
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = limit.min(theta);
                    leave = Some((i, to_upper));
                    leave_mag = alpha.abs();
                }
            }
            if theta == f64::INFINITY {
                return LpStatus::Unbounded;
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for i in 0..self.m {
                let a = self.at(i, q);
                if a != 0.0 {
                    self.beta[i] -= dir * theta * a;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let entering_value = if self.at_upper[q] { self.upper[q] - theta } else { theta };
                    let b = self.basis[r];
                    self.at_upper[b] = to_upper;
                    self.pivot(r, q);
                    self.at_upper[q] = false;
                    self.beta[r] = entering_value;
                }
            }
        }
        LpStatus::IterationLimit
    }

    fn value(&self, j: usize) -> f64 {
        if self.is_basic[j] {
            let r = self.basis.iter().position(|&b| b == j).unwrap();
            self.beta[r]
        } else if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }
}

/// Solves the continuous relaxation of `model`, ignoring integrality.
pub fn solve_lp(model: &ModelInstance, lower: &[f64], upper: &[f64]) -> LpResult {
    let nv = model.variables.len();
    let mut maps = Vec::with_capacity(nv);
    let mut col_upper: Vec<f64> = Vec::new();
    let mut col_cost: Vec<f64> = Vec::new();
    for j in 0..nv {
        let (l, u) = (lower[j], upper[j]);
        let c = model.objective[j];
        if l.is_finite() {
            maps.push(ColMap::Shift { col: col_upper.len(), offset: l });
            col_upper.push(u - l);
            col_cost.push(c);
        } else if u.is_finite() {
            maps.push(ColMap::Mirror { col: col_upper.len(), offset: u });
            col_upper.push(f64::INFINITY);
            col_cost.push(-c);
        } else {
            let pos = col_upper.len();
            maps.push(ColMap::Split { pos, neg: pos + 1 });
            col_upper.extend([f64::INFINITY, f64::INFINITY]);
            col_cost.extend([c, -c]);
        }
    }
    let ns = col_upper.len();
    let m = model.constraints.len();

    // dense structural rows, right-hand sides adjusted for the column shifts
    let mut rows = vec![vec![0.0; ns]; m];
    let mut rhs = vec![0.0; m];
    for (i, con) in model.constraints.iter().enumerate() {
        let mut b = con.rhs;
        for &(v, a) in &con.terms {
            match maps[v.0] {
                ColMap::Shift { col, offset } => {
                    rows[i][col] += a;
                    b -= a * offset;
                }
                ColMap::Mirror { col, offset } => {
                    rows[i][col] -= a;
                    b -= a * offset;
                }
                ColMap::Split { pos, neg } => {
                    rows[i][pos] += a;
                    rows[i][neg] -= a;
                }
            }
        }
        rhs[i] = b;
    }

    // slacks, sign normalisation, artificials
    let n_slack = model.constraints.iter().filter(|c| c.sense != Sense::Eq).count();
    let mut slack_of = vec![None; m];
    let mut k = ns;
    for (i, con) in model.constraints.iter().enumerate() {
        if con.sense != Sense::Eq {
            slack_of[i] = Some(k);
            k += 1;
        }
    }
    let mut needs_art = vec![false; m];
    let mut flip = vec![false; m];
    for (i, con) in model.constraints.iter().enumerate() {
        flip[i] = rhs[i] < 0.0;
        let slack_sign = match con.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => 0.0,
        };
        let effective = if flip[i] { -slack_sign } else { slack_sign };
        needs_art[i] = effective <= 0.0;
    }
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let n = ns + n_slack + n_art;

    let mut t = vec![0.0; m * n];
    let mut basis = vec![0usize; m];
    let mut beta = vec![0.0; m];
    let mut upper = col_upper.clone();
    upper.extend(std::iter::repeat(f64::INFINITY).take(n_slack + n_art));
    let mut art = ns + n_slack;
    let mut art_cols = Vec::new();
    for (i, con) in model.constraints.iter().enumerate() {
        let s = if flip[i] { -1.0 } else { 1.0 };
        for j in 0..ns {
            t[i * n + j] = s * rows[i][j];
        }
        if let Some(sc) = slack_of[i] {
            let sign = if con.sense == Sense::Le { 1.0 } else { -1.0 };
            t[i * n + sc] = s * sign;
        }
        beta[i] = s * rhs[i];
        if needs_art[i] {
            t[i * n + art] = 1.0;
            basis[i] = art;
            art_cols.push(art);
            art += 1;
        } else {
            basis[i] = slack_of[i].unwrap();
        }
    }
    let mut is_basic = vec![false; n];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut tab = Tableau {
        m,
        n,
        t,
        upper,
        basis,
        at_upper: vec![false; n],
        is_basic,
        beta,
        d: vec![0.0; n],
        blocked: vec![false; n],
    };
    let max_iter = 50 * (m + n) + 1000;

    let infeasible = |nv: usize| LpResult {
        status: LpStatus::Infeasible,
        x: vec![0.0; nv],
        objective: f64::NAN,
    };
    for j in 0..ns {
        if tab.upper[j] < 0.0 {
            return infeasible(nv);
        }
    }

    if n_art > 0 {
        let mut phase1 = vec![0.0; n];
        for &a in &art_cols {
            phase1[a] = 1.0;
        }
        tab.reprice(&phase1);
        match tab.optimize(max_iter) {
            LpStatus::Optimal => {}
            LpStatus::IterationLimit => {
                return LpResult {
                    status: LpStatus::IterationLimit,
                    x: vec![0.0; nv],
                    objective: f64::NAN,
                }
            }
            _ => return infeasible(nv),
        }
        let infeas: f64 = art_cols.iter().map(|&a| tab.value(a)).sum();
        let scale = 1.0 + tab.beta.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        if infeas > FEAS_TOL * scale {
            return infeasible(nv);
        }
        for &a in &art_cols {
            tab.upper[a] = 0.0;
            tab.blocked[a] = true;
        }
    }
    let mut cost = col_cost.clone();
    cost.extend(std::iter::repeat(0.0).take(n - ns));
    tab.reprice(&cost);
    let status = tab.optimize(max_iter);
    if status != LpStatus::Optimal {
        return LpResult {
            status,
            x: vec![0.0; nv],
            objective: f64::NAN,
        };
    }

    let x: Vec<f64> = maps
        .iter()
        .map(|&mp| match mp {
            ColMap::Shift { col, offset } => offset + tab.value(col),
            ColMap::Mirror { col, offset } => offset - tab.value(col),
            ColMap::Split { pos, neg } => tab.value(pos) - tab.value(neg),
        })
        .collect();
    let objective = model.evaluate(&x);
    LpResult {
        status: LpStatus::Optimal,
        x,
        objective,
    }
}
