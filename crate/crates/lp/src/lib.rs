//! Model layer shared by every formulation: a minimisation [`ModelInstance`],
//! an LP-file codec, and a [`solve`] entry point that dispatches to a backend.
//!
//! Two backends are available. [`Backend::Highs`] links the HiGHS solver and is
//! the default. [`Backend::Embedded`] is a dense bounded-variable simplex with
//! best-first branch and bound; it has no native dependencies and is meant for
//! small models and for cross-checking.

mod bnb;
#[cfg(feature = "highs")]
mod highs_backend;
pub mod lpfile;
pub mod model;
mod simplex;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use lpfile::{read_lp, write_lp};
pub use model::{Constraint, ModelInstance, Sense, VarId, Variable};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("LP parse error: {0}")]
    Parse(String),
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Highs,
    Embedded,
}

impl Default for Backend {
    fn default() -> Self {
        if cfg!(feature = "highs") {
            Backend::Highs
        } else {
            Backend::Embedded
        }
    }
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "highs" => Ok(Backend::Highs),
            "embedded" | "simplex" => Ok(Backend::Embedded),
            other => Err(format!("unknown backend {other}")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Highs => "highs",
            Backend::Embedded => "embedded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative MIP gap at which a solve stops.
    pub gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub threads: u32,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap: 1e-3,
            time_limit: 7200.0,
            threads: 1,
            backend: Backend::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_gap(mut self, gap: f64) -> Self {
        self.gap = gap;
        self
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit = seconds;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    /// Stopped at the time limit with an incumbent.
    TimeLimit,
    Infeasible,
    Unbounded,
    /// Stopped at the time limit without any feasible point.
    NoSolution,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::TimeLimit)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::TimeLimit => "time_limit",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::NoSolution => "no_solution",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Objective of the returned point; `NaN` when there is none.
    pub objective: f64,
    /// Best proven lower bound.
    pub bound: f64,
    pub values: Vec<f64>,
    pub seconds: f64,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    /// Relative gap `(objective - bound) / max(|objective|, 1e-10)`.
    pub fn gap(&self) -> f64 {
        if !self.status.has_solution() {
            return f64::INFINITY;
        }
        ((self.objective - self.bound) / self.objective.abs().max(1e-10)).max(0.0)
    }

    fn empty(status: Status, seconds: f64) -> Self {
        Solution {
            status,
            objective: f64::NAN,
            bound: f64::NAN,
            values: Vec::new(),
            seconds,
        }
    }
}

/// Solves `model` with the backend selected in `config`.
///
/// Returned points of a MIP have their integer columns snapped to the nearest
/// integer.
pub fn solve(model: &ModelInstance, config: &SolverConfig) -> Result<Solution, SolveError> {
    model.validate()?;
    if !(config.gap >= 0.0) || !(config.time_limit > 0.0) || config.threads == 0 {
        return Err(SolveError::Model(ModelError::Invalid(format!(
            "bad solver settings gap={} time_limit={} threads={}",
            config.gap, config.time_limit, config.threads
        ))));
    }
    let start = Instant::now();
    let mut sol = match config.backend {
        Backend::Embedded => bnb::solve(model, config)?,
        Backend::Highs => {
            #[cfg(feature = "highs")]
            {
                highs_backend::solve(model, config)?
            }
            #[cfg(not(feature = "highs"))]
            {
                return Err(SolveError::BackendUnavailable(
                    "built without the `highs` feature".into(),
                ));
            }
        }
    };
    if sol.status.has_solution() {
        if model.is_mip() {
            for (v, x) in model.variables.iter().zip(sol.values.iter_mut()) {
                if v.integer {
                    *x = x.round();
                }
            }
            sol.objective = model.evaluate(&sol.values);
            sol.bound = sol.bound.min(sol.objective);
        } else {
            sol.bound = sol.objective;
        }
    }
    sol.seconds = start.elapsed().as_secs_f64();
    Ok(sol)
}
