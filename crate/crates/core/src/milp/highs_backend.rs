use highs::{HighsModelStatus, RowProblem, Sense};

use super::program::{BackendSolution, LinearProgram, MilpBackend, SolveOptions, SolveStatus};
use crate::error::{Error, Result};

/// HiGHS through its C API.
#[derive(Debug, Clone)]
pub struct HighsBackend {
    /// Relative MIP gap at which HiGHS stops. Zero proves optimality.
    pub mip_rel_gap: f64,
}

impl Default for HighsBackend {
    fn default() -> Self {
        HighsBackend { mip_rel_gap: 0.0 }
    }
}

impl MilpBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, program: &LinearProgram, options: &SolveOptions) -> Result<BackendSolution> {
        let mut problem = RowProblem::default();
        let cols: Vec<_> = program
            .variables
            .iter()
            .map(|v| problem.add_column_with_integrality(v.cost, v.lower..=v.upper, v.integer))
            .collect();
        for c in &program.constraints {
            let terms: Vec<_> = c.terms.iter().map(|&(var, coef)| (cols[var], coef)).collect();
            problem.add_row(c.lower..=c.upper, terms);
        }

        let mut model = problem.optimise(Sense::Minimise);
        model.make_quiet();
        model.set_option("threads", 1);
        model.set_option("time_limit", options.time_limit);
        if program.has_integers() {
            model.set_option("mip_rel_gap", self.mip_rel_gap);
        }
        let solved = model
            .try_solve()
            .map_err(|s| Error::Backend(format!("HiGHS run failed: {s:?}")))?;

        let status = match solved.status() {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
            other => {
                return Err(Error::Backend(format!("HiGHS model status {other:?}")));
            }
        };
        let has_primal = matches!(
            solved.primal_solution_status(),
            highs::HighsSolutionStatus::Feasible
        ) || (status == SolveStatus::Optimal && program.variables.is_empty());
        let values = if has_primal {
            solved.get_solution().columns().to_vec()
        } else {
            Vec::new()
        };
        let objective = if has_primal {
            solved.objective_value()
        } else {
            f64::INFINITY
        };
        let best_bound = if program.has_integers() {
            solved
                .double_info_value(c"mip_dual_bound")
                .unwrap_or(objective)
        } else {
            objective
        };
        Ok(BackendSolution {
            status,
            objective,
            values,
            best_bound,
        })
    }
}
