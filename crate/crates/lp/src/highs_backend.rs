use std::num::NonZeroU32;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem};

use crate::{ModelInstance, Sense, Solution, SolveError, SolverConfig, Status};

fn run(model: &ModelInstance, config: &SolverConfig, presolve: bool) -> Result<highs::SolvedModel, SolveError> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = model
        .variables
        .iter()
        .zip(&model.objective)
        .map(|(v, &c)| pb.add_column_with_integrality(c, v.lower..=v.upper, v.integer))
        .collect();
    for con in &model.constraints {
        let terms: Vec<_> = con.terms.iter().map(|&(v, a)| (cols[v.0], a)).collect();
        match con.sense {
            Sense::Le => pb.add_row(..=con.rhs, terms),
            Sense::Ge => pb.add_row(con.rhs.., terms),
            Sense::Eq => pb.add_row(con.rhs..=con.rhs, terms),
        }
    }
    let mut m = pb
        .try_optimise(highs::Sense::Minimise)
        .map_err(|e| SolveError::Numerical(format!("HiGHS rejected the model: {e:?}")))?;
    m.make_quiet();
    m.set_threads(NonZeroU32::new(config.threads).expect("threads checked by caller"));
    m.set_option("mip_rel_gap", config.gap);
    m.set_option("time_limit", config.time_limit);
    m.set_option("random_seed", 0);
    if !presolve {
        m.set_option("presolve", "off");
    }
    m.try_solve()
        .map_err(|e| SolveError::Numerical(format!("HiGHS failed: {e:?}")))
}

pub fn solve(model: &ModelInstance, config: &SolverConfig) -> Result<Solution, SolveError> {
    if model.variables.is_empty() {
        let feasible = model.constraints.iter().all(|c| match c.sense {
            Sense::Le => 0.0 <= c.rhs,
            Sense::Ge => 0.0 >= c.rhs,
            Sense::Eq => c.rhs == 0.0,
        });
        let status = if feasible { Status::Optimal } else { Status::Infeasible };
        return Ok(Solution {
            status,
            objective: if feasible { 0.0 } else { f64::NAN },
            bound: if feasible { 0.0 } else { f64::NAN },
            values: Vec::new(),
            seconds: 0.0,
        });
    }
    let mut solved = run(model, config, true)?;
    if solved.status() == HighsModelStatus::UnboundedOrInfeasible {
        solved = run(model, config, false)?;
    }
    let status = solved.status();
    let has_point = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
    let status = match status {
        HighsModelStatus::Optimal => Status::Optimal,
        HighsModelStatus::Infeasible => Status::Infeasible,
        HighsModelStatus::Unbounded => Status::Unbounded,
        HighsModelStatus::UnboundedOrInfeasible => Status::Infeasible,
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedInterrupt
        | HighsModelStatus::ReachedMemoryLimit => {
            if has_point {
                Status::TimeLimit
            } else {
                Status::NoSolution
            }
        }
        other => return Err(SolveError::Numerical(format!("HiGHS returned {other:?}"))),
    };
    if !status.has_solution() {
        return Ok(Solution::empty(status, 0.0));
    }
    let values = solved.get_solution().columns().to_vec();
    let objective = model.evaluate(&values);
    let bound = if model.is_mip() {
        solved
            .double_info_value(c"mip_dual_bound")
            .unwrap_or(f64::NEG_INFINITY)
    } else {
        objective
    };
    Ok(Solution {
        status,
        objective,
        bound,
        values,
        seconds: 0.0,
    })
}
