//! Prune masks, feasibility repair, and pruned ILP solves.

use std::time::Instant;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::features::{assemble_rows, local_rank, lp_feature, weight_features, EdgeFeatureRow};
use crate::graph::{
    is_connected, to_directed, CentralityOptions, CentralityTable, DirectedInstance,
};
use crate::instance::{EdgeId, SteinerInstance};
use crate::milp::{
    apply_hard_prune, apply_soft_prune, build_model, extract_tree, solve, MilpBackend, Mode,
    SolveOptions, SolveResult, SolveStatus, SteinerTree, LP_ZERO_TOL,
};
use crate::weight::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    Classifier,
    LpBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneMask {
    pub pruned: Vec<EdgeId>,
    pub retained: Vec<EdgeId>,
    /// Retained only because they carry LP value (subset of `retained`).
    pub repair_added: Vec<EdgeId>,
    pub threshold: f64,
    pub source: MaskSource,
}

impl PruneMask {
    pub fn edge_count(&self) -> usize {
        self.pruned.len() + self.retained.len()
    }

    pub fn prune_rate(&self) -> f64 {
        match self.edge_count() {
            0 => 0.0,
            m => self.pruned.len() as f64 / m as f64,
        }
    }

    /// Both arcs of every pruned edge.
    pub fn pruned_arcs(&self) -> Vec<usize> {
        self.pruned
            .iter()
            .flat_map(|&e| DirectedInstance::arcs_of(e))
            .collect()
    }
}

/// Prunes edges scoring below `threshold`, except that every edge in the LP
/// support (`lp > 1e-6`) is kept; those are recorded as repair additions.
pub fn make_mask(scores: &[f64], threshold: f64, lp: &[f64]) -> PruneMask {
    assert_eq!(scores.len(), lp.len(), "scores and LP values must cover the same edges");
    let mut mask = PruneMask {
        pruned: Vec::new(),
        retained: Vec::new(),
        repair_added: Vec::new(),
        threshold,
        source: MaskSource::Classifier,
    };
    for (e, (&s, &x)) in scores.iter().zip(lp).enumerate() {
        let below = s < threshold;
        if below && x <= LP_ZERO_TOL {
            mask.pruned.push(e);
        } else {
            mask.retained.push(e);
            if below {
                mask.repair_added.push(e);
            }
        }
    }
    mask
}

/// Prunes edges whose LP value is below `lp_threshold`, with values within
/// the LP zero tolerance counted as exactly 0.
pub fn lp_baseline_mask(lp: &[f64], lp_threshold: f64) -> PruneMask {
    let mut mask = PruneMask {
        pruned: Vec::new(),
        retained: Vec::new(),
        repair_added: Vec::new(),
        threshold: lp_threshold,
        source: MaskSource::LpBaseline,
    };
    for (e, &x) in lp.iter().enumerate() {
        let x = if x <= LP_ZERO_TOL { 0.0 } else { x };
        if x < lp_threshold {
            mask.pruned.push(e);
        } else {
            mask.retained.push(e);
        }
    }
    mask
}

/// LP-baseline mask pruning exactly `count` edges: those with the smallest
/// LP values, ties by edge id. `threshold` records the largest pruned value.
pub fn lp_baseline_mask_with_count(lp: &[f64], count: usize) -> PruneMask {
    let snapped: Vec<f64> = lp.iter().map(|&x| if x <= LP_ZERO_TOL { 0.0 } else { x }).collect();
    let mut order: Vec<EdgeId> = (0..lp.len()).collect();
    order.sort_by(|&a, &b| snapped[a].total_cmp(&snapped[b]).then(a.cmp(&b)));
    let count = count.min(lp.len());
    let mut pruned = order[..count].to_vec();
    let mut retained = order[count..].to_vec();
    pruned.sort_unstable();
    retained.sort_unstable();
    PruneMask {
        threshold: pruned.iter().map(|&e| snapped[e]).fold(0.0, f64::max),
        pruned,
        retained,
        repair_added: Vec::new(),
        source: MaskSource::LpBaseline,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportMode {
    Original,
    Hard,
    Soft(u64),
}

impl std::fmt::Display for ReportMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReportMode::Original => f.write_str("original"),
            ReportMode::Hard => f.write_str("hard"),
            ReportMode::Soft(b) => write!(f, "soft({b})"),
        }
    }
}

impl Serialize for ReportMode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn one_based<S: Serializer>(edges: &[EdgeId], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(edges.iter().map(|e| e + 1))
}

/// Outcome of one solve. Times are in seconds; edge ids serialise 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub instance: String,
    pub mode: ReportMode,
    pub threshold: Option<f64>,
    pub objective: Option<Weight>,
    pub optimal_objective: Option<Weight>,
    pub objective_increase_pct: Option<f64>,
    pub feature_time: f64,
    pub solve_time: f64,
    pub original_time: Option<f64>,
    pub runtime_decrease_pct: Option<f64>,
    pub prune_rate: f64,
    #[serde(serialize_with = "one_based")]
    pub tree_edges: Vec<EdgeId>,
    pub status: SolveStatus,
}

pub fn objective_increase_pct(pruned: f64, original: f64) -> f64 {
    if original == 0.0 {
        return if pruned == 0.0 { 0.0 } else { f64::INFINITY };
    }
    100.0 * (pruned - original) / original
}

/// `100 * (t_orig - (feature + solve)) / t_orig`.
pub fn runtime_decrease_pct(original_time: f64, feature_time: f64, solve_time: f64) -> f64 {
    100.0 * (original_time - (feature_time + solve_time)) / original_time
}

/// Fills the comparison fields of `report` from the unpruned solve.
pub fn evaluate(report: &SolveReport, original: &SolveReport) -> Result<SolveReport> {
    if report.instance != original.instance {
        return Err(Error::InstanceMismatch(
            report.instance.clone(),
            original.instance.clone(),
        ));
    }
    let mut out = report.clone();
    out.optimal_objective = original.objective;
    out.original_time = Some(original.solve_time);
    out.objective_increase_pct = match (report.objective, original.objective) {
        (Some(p), Some(o)) => Some(objective_increase_pct(p.as_f64(), o.as_f64())),
        _ => None,
    };
    out.runtime_decrease_pct = (original.solve_time > 0.0).then(|| {
        runtime_decrease_pct(original.solve_time, report.feature_time, report.solve_time)
    });
    Ok(out)
}

/// Root used for every model of an instance: its lowest-numbered terminal.
pub fn canonical_root(inst: &SteinerInstance) -> usize {
    inst.terminals()[0]
}

/// Solves the LP relaxation or the ILP of the whole instance.
pub fn solve_instance(
    inst: &SteinerInstance,
    mode: Mode,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SolveResult> {
    if inst.terminals().len() == 1 {
        return Ok(SolveResult {
            status: SolveStatus::Optimal,
            mode,
            objective: 0.0,
            y_values: vec![0.0; 2 * inst.edge_count()],
            wall_time: 0.0,
            best_bound: 0.0,
        });
    }
    let directed = to_directed(inst, canonical_root(inst))?;
    solve(&build_model(&directed, mode)?, options, backend)
}

fn report_from(
    inst: &SteinerInstance,
    mode: ReportMode,
    result: &SolveResult,
    prune_rate: f64,
    threshold: Option<f64>,
) -> Result<(SolveReport, Option<SteinerTree>)> {
    let tree = match result.status {
        SolveStatus::Infeasible => return Err(Error::Infeasible),
        SolveStatus::Optimal => Some(extract_tree(inst, result)?),
        _ if result.has_solution() => Some(extract_tree(inst, result)?),
        _ => None,
    };
    let report = SolveReport {
        instance: inst.name().to_string(),
        mode,
        threshold,
        objective: tree.as_ref().map(|t| t.weight),
        optimal_objective: None,
        objective_increase_pct: None,
        feature_time: 0.0,
        solve_time: result.wall_time,
        original_time: None,
        runtime_decrease_pct: None,
        prune_rate,
        tree_edges: tree.as_ref().map(|t| t.edges.clone()).unwrap_or_default(),
        status: result.status,
    };
    Ok((report, tree))
}

/// Unpruned ILP solve, also returning the tree when one was found.
pub fn solve_original(
    inst: &SteinerInstance,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<(SolveReport, Option<SteinerTree>)> {
    let result = solve_instance(inst, Mode::Integral, backend, options)?;
    report_from(inst, ReportMode::Original, &result, 0.0, None)
}

fn solve_pruned(
    inst: &SteinerInstance,
    mask: &PruneMask,
    budget: Option<u64>,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SolveReport> {
    if mask.edge_count() != inst.edge_count() {
        return Err(Error::InvalidParameter(format!(
            "mask covers {} edges, instance has {}",
            mask.edge_count(),
            inst.edge_count()
        )));
    }
    let mode = budget.map_or(ReportMode::Hard, ReportMode::Soft);
    let result = if inst.terminals().len() == 1 {
        solve_instance(inst, Mode::Integral, backend, options)?
    } else {
        let directed = to_directed(inst, canonical_root(inst))?;
        let base = build_model(&directed, Mode::Integral)?;
        let arcs = mask.pruned_arcs();
        let model = match budget {
            None => apply_hard_prune(base, &arcs),
            Some(b) => apply_soft_prune(base, &arcs, b),
        };
        solve(&model, options, backend)?
    };
    Ok(report_from(inst, mode, &result, mask.prune_rate(), Some(mask.threshold))?.0)
}

/// ILP with every pruned edge fixed to zero.
pub fn solve_hard(
    inst: &SteinerInstance,
    mask: &PruneMask,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SolveReport> {
    solve_pruned(inst, mask, None, backend, options)
}

/// ILP allowing at most `budget` pruned edges in the solution.
pub fn solve_soft(
    inst: &SteinerInstance,
    mask: &PruneMask,
    budget: u64,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SolveReport> {
    solve_pruned(inst, mask, Some(budget), backend, options)
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub solve: SolveOptions,
    pub centrality: CentralityOptions,
}

/// An instance with its LP relaxation and feature rows computed.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub instance: SteinerInstance,
    pub lp: SolveResult,
    pub lp_values: Vec<f64>,
    pub rows: Vec<EdgeFeatureRow>,
    /// Seconds for the LP relaxation plus every other feature.
    pub feature_time: f64,
}

impl PreparedInstance {
    /// True when the LP optimum is already integral, hence an optimal tree.
    pub fn lp_is_integral(&self) -> bool {
        self.lp.status == SolveStatus::Optimal && self.lp.is_integral()
    }
}

/// Computes the LP relaxation and every edge feature. Rejects disconnected
/// graphs. With `optimal_tree`, rows are labelled.
pub fn prepare(
    inst: &SteinerInstance,
    optimal_tree: Option<&[EdgeId]>,
    backend: &dyn MilpBackend,
    options: &PipelineOptions,
) -> Result<PreparedInstance> {
    if !is_connected(inst) {
        return Err(Error::Disconnected);
    }
    let start = Instant::now();
    let lp = solve_instance(inst, Mode::Relaxed, backend, &options.solve)?;
    if lp.status != SolveStatus::Optimal {
        return Err(Error::Backend(format!("LP relaxation ended with status {}", lp.status)));
    }
    let lp_values = lp_feature(inst, &lp)?;
    let weights = weight_features(inst);
    let ranks = local_rank(inst);
    let centralities = match CentralityTable::compute(inst, &options.centrality) {
        Err(Error::NoConvergence(iters)) => {
            log::warn!(
                "{}: eigenvector centrality did not converge in {iters} iterations; using degree",
                inst.name()
            );
            let mut opts = options.centrality;
            opts.eigen_max_iter = 0;
            degree_fallback(inst, &opts)?
        }
        other => other?,
    };
    let rows = assemble_rows(inst, &lp_values, &weights, &ranks, &centralities, optimal_tree)?;
    Ok(PreparedInstance {
        instance: inst.clone(),
        lp,
        lp_values,
        rows,
        feature_time: start.elapsed().as_secs_f64(),
    })
}

fn degree_fallback(inst: &SteinerInstance, opts: &CentralityOptions) -> Result<CentralityTable> {
    let degree = crate::graph::degree_centrality(inst)?;
    let betweenness = if opts.weighted_betweenness {
        crate::graph::betweenness_centrality(inst)?
    } else {
        crate::graph::centrality::betweenness_by_hops(inst)
    };
    let norm = degree.iter().map(|d| d * d).sum::<f64>().sqrt();
    let eigenvector = degree.iter().map(|d| d / norm).collect();
    Ok(CentralityTable {
        degree,
        betweenness,
        eigenvector,
    })
}

/// Masks the prepared instance at `threshold` and solves it hard
/// (`budget = None`) or soft. When the LP is integral the LP support is
/// returned as the optimal tree without another solve.
pub fn prune_and_solve(
    prep: &PreparedInstance,
    scores: &[f64],
    threshold: f64,
    budget: Option<u64>,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<(PruneMask, SolveReport)> {
    let mask = make_mask(scores, threshold, &prep.lp_values);
    let report = solve_masked(prep, &mask, budget, backend, options)?;
    Ok((mask, report))
}

/// Solves a prepared instance under any mask, filling `feature_time`.
pub fn solve_masked(
    prep: &PreparedInstance,
    mask: &PruneMask,
    budget: Option<u64>,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let inst = &prep.instance;
    let lp_support_kept = mask.pruned.iter().all(|&e| prep.lp_values[e] <= LP_ZERO_TOL);
    let mut report = if prep.lp_is_integral() && lp_support_kept {
        let relaxed_as_integral = SolveResult {
            mode: Mode::Integral,
            wall_time: 0.0,
            ..prep.lp.clone()
        };
        let tree = extract_tree(inst, &relaxed_as_integral)?;
        SolveReport {
            instance: inst.name().to_string(),
            mode: budget.map_or(ReportMode::Hard, ReportMode::Soft),
            threshold: Some(mask.threshold),
            objective: Some(tree.weight),
            optimal_objective: None,
            objective_increase_pct: None,
            feature_time: 0.0,
            solve_time: 0.0,
            original_time: None,
            runtime_decrease_pct: None,
            prune_rate: mask.prune_rate(),
            tree_edges: tree.edges,
            status: SolveStatus::Optimal,
        }
    } else {
        solve_pruned(inst, mask, budget, backend, options)?
    };
    report.feature_time = prep.feature_time;
    Ok(report)
}
