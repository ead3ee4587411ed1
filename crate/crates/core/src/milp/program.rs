//! Solver-neutral linear program and the backend interface.

use serde::Serialize;

use crate::error::Result;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variable {
    pub cost: f64,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

/// `lower <= sum(coef * var) <= upper`; use infinities for one-sided rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// Minimisation problem in sparse row form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn add_variable(&mut self, var: Variable) -> VarId {
        self.variables.push(var);
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(VarId, f64)>, lower: f64, upper: f64) {
        self.constraints.push(Constraint {
            terms,
            lower,
            upper,
        });
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.variables[var].lower = lower;
        self.variables[var].upper = upper;
    }

    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(|v| v.integer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    Error,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { time_limit: 3600.0 }
    }
}

/// Raw backend answer. `values` is empty when no primal solution exists.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub best_bound: f64,
}

/// An LP/MILP engine. Implementations must be usable from several threads,
/// each call owning its own solver session.
pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, program: &LinearProgram, options: &SolveOptions) -> Result<BackendSolution>;
}
