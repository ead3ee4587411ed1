//! Multicommodity-flow formulation of the Steiner tree problem.
//!
//! For a directed instance rooted at terminal `r` with commodities
//! `K = terminals \ {r}`:
//!
//! ```text
//! minimise   sum_a c_a y_a
//! subject to sum_{a out of i} x^k_a - sum_{a into i} x^k_a = +1 (i = r), -1 (i = k), 0 otherwise
//!            x^k_a <= y_a                 for every arc a and commodity k
//!            x^k_a >= 0
//!            y_a in {0, 1}                (y_a in [0, 1] when relaxed)
//! ```
//!
//! The variable layout in the generated [`LinearProgram`] is `y` (one per
//! arc) followed by `x`, commodity-major.

mod highs_backend;
mod lp_file;
pub mod program;

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{prune_to_tree, validate_tree, ArcId, DirectedInstance};
use crate::instance::{EdgeId, SteinerInstance};
use crate::weight::Weight;

pub use highs_backend::HighsBackend;
pub use lp_file::write_lp;
pub use program::{
    BackendSolution, Constraint, LinearProgram, MilpBackend, SolveOptions, SolveStatus, VarId,
    Variable,
};

/// Integrality tolerance on `y` values.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// LP values at or below this are treated as zero.
pub const LP_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Integral,
    Relaxed,
}

/// `sum_{a in arcs} y_a <= budget`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetConstraint {
    pub arcs: Vec<ArcId>,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    directed: DirectedInstance,
    mode: Mode,
    /// Upper bound of each `y_a`; 0 for hard-pruned arcs.
    y_upper: Vec<f64>,
    budgets: Vec<BudgetConstraint>,
}

pub fn build_model(directed: &DirectedInstance, mode: Mode) -> Result<FlowModel> {
    if directed.commodities().is_empty() {
        return Err(Error::NoCommodities);
    }
    Ok(FlowModel {
        directed: directed.clone(),
        mode,
        y_upper: vec![1.0; directed.arc_count()],
        budgets: Vec::new(),
    })
}

/// Fixes `y_a = 0` for every listed arc.
pub fn apply_hard_prune(mut model: FlowModel, pruned_arcs: &[ArcId]) -> FlowModel {
    for &a in pruned_arcs {
        model.y_upper[a] = 0.0;
    }
    model
}

/// Adds `sum_{a in pruned} y_a <= budget`, keeping every variable free.
pub fn apply_soft_prune(mut model: FlowModel, pruned_arcs: &[ArcId], budget: u64) -> FlowModel {
    model.budgets.push(BudgetConstraint {
        arcs: pruned_arcs.to_vec(),
        budget,
    });
    model
}

impl FlowModel {
    pub fn directed(&self) -> &DirectedInstance {
        &self.directed
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn y_count(&self) -> usize {
        self.directed.arc_count()
    }

    pub fn x_count(&self) -> usize {
        self.directed.arc_count() * self.directed.commodities().len()
    }

    pub fn balance_row_count(&self) -> usize {
        self.directed.node_count() * self.directed.commodities().len()
    }

    pub fn coupling_row_count(&self) -> usize {
        self.x_count()
    }

    pub fn budgets(&self) -> &[BudgetConstraint] {
        &self.budgets
    }

    pub fn y_upper(&self, arc: ArcId) -> f64 {
        self.y_upper[arc]
    }

    /// Arcs whose `y` is not fixed to zero.
    pub fn active_arc_count(&self) -> usize {
        self.y_upper.iter().filter(|&&u| u > 0.0).count()
    }

    pub fn y_var(&self, arc: ArcId) -> VarId {
        arc
    }

    pub fn x_var(&self, commodity: usize, arc: ArcId) -> VarId {
        let arcs = self.directed.arc_count();
        arcs + commodity * arcs + arc
    }

    pub fn to_program(&self) -> LinearProgram {
        let d = &self.directed;
        let arcs = d.arc_count();
        let integer = self.mode == Mode::Integral;
        let mut lp = LinearProgram::default();
        lp.variables.reserve(self.y_count() + self.x_count());
        for (a, arc) in d.arcs().iter().enumerate() {
            lp.add_variable(Variable {
                cost: arc.weight.as_f64(),
                lower: 0.0,
                upper: self.y_upper[a],
                integer,
            });
        }
        for _ in 0..self.x_count() {
            lp.add_variable(Variable {
                cost: 0.0,
                lower: 0.0,
                upper: f64::INFINITY,
                integer: false,
            });
        }

        let mut out_arcs = vec![Vec::new(); d.node_count()];
        let mut in_arcs = vec![Vec::new(); d.node_count()];
        for (a, arc) in d.arcs().iter().enumerate() {
            out_arcs[arc.tail].push(a);
            in_arcs[arc.head].push(a);
        }
        for (k, &sink) in d.commodities().iter().enumerate() {
            for node in 0..d.node_count() {
                let rhs = if node == d.root() {
                    1.0
                } else if node == sink {
                    -1.0
                } else {
                    0.0
                };
                let terms = out_arcs[node]
                    .iter()
                    .map(|&a| (self.x_var(k, a), 1.0))
                    .chain(in_arcs[node].iter().map(|&a| (self.x_var(k, a), -1.0)))
                    .collect();
                lp.add_constraint(terms, rhs, rhs);
            }
        }
        for k in 0..d.commodities().len() {
            for a in 0..arcs {
                lp.add_constraint(
                    vec![(self.x_var(k, a), 1.0), (self.y_var(a), -1.0)],
                    f64::NEG_INFINITY,
                    0.0,
                );
            }
        }
        for b in &self.budgets {
            let terms = b.arcs.iter().map(|&a| (self.y_var(a), 1.0)).collect();
            lp.add_constraint(terms, f64::NEG_INFINITY, b.budget as f64);
        }
        lp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub mode: Mode,
    pub objective: f64,
    /// Value of each arc variable `y_a`, indexed by arc id. Empty when the
    /// solver produced no primal solution.
    pub y_values: Vec<f64>,
    /// Seconds spent building the program and running the backend.
    pub wall_time: f64,
    pub best_bound: f64,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        !self.y_values.is_empty()
    }

    /// True when every `y` lies within the integrality tolerance of 0 or 1.
    pub fn is_integral(&self) -> bool {
        self.y_values
            .iter()
            .all(|&y| y.abs() <= INTEGRALITY_TOL || (y - 1.0).abs() <= INTEGRALITY_TOL)
    }
}

pub fn solve(
    model: &FlowModel,
    options: &SolveOptions,
    backend: &dyn MilpBackend,
) -> Result<SolveResult> {
    let start = Instant::now();
    let program = model.to_program();
    let raw = backend.solve(&program, options)?;
    let wall_time = start.elapsed().as_secs_f64();
    let y_values = if raw.values.is_empty() {
        Vec::new()
    } else {
        raw.values[..model.y_count()]
            .iter()
            .map(|&y| y.clamp(0.0, 1.0))
            .collect()
    };
    Ok(SolveResult {
        status: raw.status,
        mode: model.mode(),
        objective: raw.objective,
        y_values,
        wall_time,
        best_bound: raw.best_bound,
    })
}

/// A Steiner tree as a sorted list of undirected edge ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SteinerTree {
    pub edges: Vec<EdgeId>,
    pub weight: Weight,
}

impl SteinerTree {
    pub fn empty() -> Self {
        SteinerTree {
            edges: Vec::new(),
            weight: Weight::ZERO,
        }
    }

    pub fn from_edges(inst: &SteinerInstance, mut edges: Vec<EdgeId>) -> Self {
        edges.sort_unstable();
        let weight = inst.total_weight(edges.iter().copied());
        SteinerTree { edges, weight }
    }
}

/// Reads the tree off an integral solution: an edge is in the tree when
/// either of its arcs has `y >= 0.5`.
///
/// Zero-weight redundancy (cycles or dangling Steiner paths of weight 0) is
/// trimmed. For an optimal result the tree weight must match the objective;
/// an incumbent from a time-limited run may only be at most the objective.
pub fn extract_tree(inst: &SteinerInstance, result: &SolveResult) -> Result<SteinerTree> {
    if inst.terminals().len() == 1 {
        return Ok(SteinerTree::empty());
    }
    if !result.has_solution() {
        return Err(Error::InvalidTree(format!(
            "no primal solution (status {})",
            result.status
        )));
    }
    if result.y_values.len() != 2 * inst.edge_count() {
        return Err(Error::InvalidTree("solution does not match instance".into()));
    }
    let chosen: Vec<EdgeId> = (0..inst.edge_count())
        .filter(|&e| {
            let [a, b] = DirectedInstance::arcs_of(e);
            result.y_values[a] >= 0.5 || result.y_values[b] >= 0.5
        })
        .collect();
    let edges = prune_to_tree(inst, &chosen);
    validate_tree(inst, &edges)?;
    let tree = SteinerTree::from_edges(inst, edges);
    let tol = 1e-6 * (1.0 + result.objective.abs());
    let gap = tree.weight.as_f64() - result.objective;
    let ok = match result.status {
        SolveStatus::Optimal => gap.abs() <= tol,
        _ => gap <= tol,
    };
    if !ok {
        return Err(Error::InvalidTree(format!(
            "tree weight {} differs from objective {}",
            tree.weight, result.objective
        )));
    }
    Ok(tree)
}
