//! Experiment harness: runtime manifest, runtime-ordered split, training,
//! threshold sweeps and report files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::write_rows_file;
use crate::graph::CentralityOptions;
use crate::instance::SteinerInstance;
use crate::learn::{
    feature_importance, predict, rank_by_magnitude, train, ClassifierKind, FeatureImportance,
    Hyperparams, TrainedModel,
};
use crate::milp::{MilpBackend, Mode, SolveOptions, SolveStatus};
use crate::oracle::incidence_instance;
use crate::prune::{
    evaluate, lp_baseline_mask_with_count, make_mask, prepare, solve_instance, solve_masked,
    solve_original, PipelineOptions, PreparedInstance, SolveReport,
};
use crate::stp::read_instance;
use crate::weight::Weight;

/// Slack allowed above 1 in a threshold grid, so `1 + eps` prunes everything.
pub const THRESHOLD_EPS: f64 = 1e-6;

pub const MANIFEST_FILE: &str = "runtimes.csv";

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Runtime cache; defaults to `runtimes.csv` inside the dataset directory.
    pub manifest: Option<PathBuf>,
    /// Fraction of instances (fastest first) used for training.
    pub split_ratio: f64,
    pub classifier: ClassifierKind,
    pub hyperparams: Hyperparams,
    pub thresholds: Vec<f64>,
    pub soft_budgets: Vec<u64>,
    /// Seconds per ILP solve.
    pub time_limit: f64,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub centrality: CentralityOptions,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            manifest: None,
            split_ratio: 0.8,
            classifier: ClassifierKind::Logistic,
            hyperparams: Hyperparams::default(),
            thresholds: (0..=10).map(|i| i as f64 / 10.0).collect(),
            soft_budgets: Vec::new(),
            time_limit: 3600.0,
            seed: 0,
            jobs: 1,
            out: out.into(),
            centrality: CentralityOptions::default(),
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.dataset.join(MANIFEST_FILE))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.thresholds.is_empty() {
            return bad("threshold grid is empty".into());
        }
        if self
            .thresholds
            .iter()
            .any(|t| !(0.0..=1.0 + THRESHOLD_EPS).contains(t))
        {
            return bad(format!("thresholds must lie in [0, 1 + {THRESHOLD_EPS}]"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return bad("thresholds must be strictly ascending".into());
        }
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return bad(format!("time limit {} must be positive", self.time_limit));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split ratio {} outside (0, 1)", self.split_ratio));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        Ok(())
    }

    fn pipeline(&self) -> PipelineOptions {
        PipelineOptions {
            solve: SolveOptions {
                time_limit: self.time_limit,
            },
            centrality: self.centrality,
        }
    }
}

/// Parses a comma-separated threshold list such as `0,0.25,0.5`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad threshold {s:?}")))
        })
        .collect()
}

/// Reads every `.stp` file in `dir` (sorted by file name). Instances are
/// named after their file stem so names are unique.
pub fn load_dataset(dir: &Path) -> Result<Vec<SteinerInstance>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_stp = path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("stp"));
        if is_stp && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok(read_instance(p)?.with_name(stem))
        })
        .collect()
}

/// Reads an `instance,runtime_s` manifest; a missing file is an empty map.
pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, f64>> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut map = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let runtime: f64 = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .filter(|t: &f64| *t >= 0.0)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("{}: bad manifest row {:?}", path.display(), rec))
            })?;
        map.insert(rec[0].to_string(), runtime);
    }
    Ok(map)
}

pub fn write_manifest(path: &Path, runtimes: &BTreeMap<String, f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["instance", "runtime_s"])?;
    for (name, t) in runtimes {
        w.write_record([name.as_str(), &t.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sorts instances by original runtime (ties by name) and puts the first
/// `ceil(ratio * n)` into the training set.
pub fn split_dataset(
    names: &[String],
    runtimes: &BTreeMap<String, f64>,
    ratio: f64,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut timed = names
        .iter()
        .map(|n| {
            runtimes
                .get(n)
                .map(|&t| (t, n.clone()))
                .ok_or_else(|| Error::MissingRuntime(n.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    timed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let cut = ((ratio * names.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let cut = cut.min(names.len());
    let mut names = timed.into_iter().map(|(_, n)| n);
    let train = names.by_ref().take(cut).collect();
    Ok((train, names.collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSpec {
    pub count: usize,
    pub nodes: usize,
    pub edges: usize,
    pub terminals: usize,
    pub seed: u64,
    /// Keep only instances whose LP relaxation is fractional.
    pub fractional_only: bool,
}

/// Incidence-weighted instances drawn from consecutive seeds starting at
/// `spec.seed`, filtered as requested. Deterministic for a given spec.
pub fn synthetic_corpus(
    spec: &CorpusSpec,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<Vec<SteinerInstance>> {
    const CHUNK: u64 = 16;
    const MAX_TRIES: u64 = 100_000;
    let mut out = Vec::with_capacity(spec.count);
    let mut next = spec.seed;
    while out.len() < spec.count {
        if next - spec.seed > MAX_TRIES {
            return Err(Error::InvalidParameter(format!(
                "no {} fractional instances within {MAX_TRIES} seeds",
                spec.count
            )));
        }
        let batch: Vec<Option<SteinerInstance>> = (next..next + CHUNK)
            .into_par_iter()
            .map(|s| {
                let inst = incidence_instance(spec.nodes, spec.edges, spec.terminals, s)?;
                if !spec.fractional_only {
                    return Ok(Some(inst));
                }
                let lp = solve_instance(&inst, Mode::Relaxed, backend, options)?;
                Ok((lp.status == SolveStatus::Optimal && !lp.is_integral()).then_some(inst))
            })
            .collect::<Result<_>>()?;
        out.extend(batch.into_iter().flatten());
        next += CHUNK;
    }
    out.truncate(spec.count);
    Ok(out)
}

/// One point of a per-instance trade-off curve, with the LP-baseline mask
/// solved at the same number of pruned edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub threshold: f64,
    pub prune_rate: f64,
    pub repair_added: usize,
    pub objective: Option<Weight>,
    pub optimal_objective: Option<Weight>,
    pub objective_increase_pct: Option<f64>,
    pub feature_time: f64,
    pub solve_time: f64,
    pub original_time: f64,
    pub runtime_decrease_pct: Option<f64>,
    pub status: SolveStatus,
    pub baseline_prune_rate: f64,
    pub baseline_objective: Option<Weight>,
    pub baseline_solve_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub instance: String,
    pub points: Vec<TradeoffPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceFailure {
    pub instance: String,
    pub stage: &'static str,
    pub message: String,
}

/// Aggregate over the test instances at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSummary {
    pub threshold: f64,
    pub instances: usize,
    pub mean_prune_rate: f64,
    pub median_gap_pct: f64,
    pub mean_feature_time: f64,
    pub mean_solve_time: f64,
    pub mean_original_time: f64,
    /// Instances where the classifier objective is at most the baseline's.
    pub baseline_not_worse: usize,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub model: Option<TrainedModel>,
    pub importance: Vec<FeatureImportance>,
    /// Test-instance reports ordered by instance name: original, hard per
    /// threshold, then soft per threshold and budget.
    pub reports: Vec<SolveReport>,
    pub curves: Vec<TradeoffCurve>,
    pub failures: Vec<InstanceFailure>,
}

impl BenchOutcome {
    pub fn threshold_summaries(&self) -> Vec<ThresholdSummary> {
        let Some(first) = self.curves.first() else {
            return Vec::new();
        };
        (0..first.points.len())
            .map(|i| {
                let pts: Vec<&TradeoffPoint> = self.curves.iter().map(|c| &c.points[i]).collect();
                let k = pts.len() as f64;
                let mean = |f: &dyn Fn(&TradeoffPoint) -> f64| pts.iter().map(|p| f(p)).sum::<f64>() / k;
                let mut gaps: Vec<f64> = pts
                    .iter()
                    .map(|p| p.objective_increase_pct.unwrap_or(f64::INFINITY))
                    .collect();
                gaps.sort_by(f64::total_cmp);
                ThresholdSummary {
                    threshold: pts[0].threshold,
                    instances: pts.len(),
                    mean_prune_rate: mean(&|p| p.prune_rate),
                    median_gap_pct: median_sorted(&gaps),
                    mean_feature_time: mean(&|p| p.feature_time),
                    mean_solve_time: mean(&|p| p.solve_time),
                    mean_original_time: mean(&|p| p.original_time),
                    baseline_not_worse: pts
                        .iter()
                        .filter(|p| match (p.objective, p.baseline_objective) {
                            (Some(c), Some(b)) => c <= b,
                            (Some(_), None) => true,
                            _ => false,
                        })
                        .count(),
                }
            })
            .collect()
    }
}

fn median_sorted(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => xs[n / 2],
        n => (xs[n / 2 - 1] + xs[n / 2]) / 2.0,
    }
}

struct Stage1 {
    original: SolveReport,
    prep: PreparedInstance,
}

fn stage1(
    inst: &SteinerInstance,
    backend: &dyn MilpBackend,
    opts: &PipelineOptions,
) -> std::result::Result<Stage1, InstanceFailure> {
    let fail = |stage, e: Error| InstanceFailure {
        instance: inst.name().to_string(),
        stage,
        message: e.to_string(),
    };
    let (original, tree) = solve_original(inst, backend, &opts.solve).map_err(|e| fail("original", e))?;
    let tree = match (original.status, tree) {
        (SolveStatus::Optimal, Some(t)) => t,
        (status, _) => {
            return Err(fail(
                "original",
                Error::Backend(format!("original solve ended with status {status}; no labels")),
            ))
        }
    };
    let prep = prepare(inst, Some(&tree.edges), backend, opts).map_err(|e| fail("features", e))?;
    Ok(Stage1 { original, prep })
}

fn run_test_instance(
    s1: &Stage1,
    model: &TrainedModel,
    config: &ExperimentConfig,
    backend: &dyn MilpBackend,
) -> Result<(Vec<SolveReport>, TradeoffCurve)> {
    let opts = config.pipeline().solve;
    let prep = &s1.prep;
    let scores = predict(model, &prep.rows)?;
    let mut hard = Vec::new();
    let mut soft = Vec::new();
    let mut points = Vec::new();
    for &tau in &config.thresholds {
        let mask = make_mask(&scores, tau, &prep.lp_values);
        let report = evaluate(&solve_masked(prep, &mask, None, backend, &opts)?, &s1.original)?;
        let base_mask = lp_baseline_mask_with_count(&prep.lp_values, mask.pruned.len());
        let base = match solve_masked(prep, &base_mask, None, backend, &opts) {
            Ok(r) => Some(r),
            Err(Error::Infeasible) => None,
            Err(e) => return Err(e),
        };
        points.push(TradeoffPoint {
            threshold: tau,
            prune_rate: mask.prune_rate(),
            repair_added: mask.repair_added.len(),
            objective: report.objective,
            optimal_objective: report.optimal_objective,
            objective_increase_pct: report.objective_increase_pct,
            feature_time: report.feature_time,
            solve_time: report.solve_time,
            original_time: s1.original.solve_time,
            runtime_decrease_pct: report.runtime_decrease_pct,
            status: report.status,
            baseline_prune_rate: base_mask.prune_rate(),
            baseline_objective: base.as_ref().and_then(|b| b.objective),
            baseline_solve_time: base.as_ref().map_or(0.0, |b| b.solve_time),
        });
        hard.push(report);
        for &budget in &config.soft_budgets {
            let r = solve_masked(prep, &mask, Some(budget), backend, &opts)?;
            soft.push(evaluate(&r, &s1.original)?);
        }
    }
    let mut reports = vec![s1.original.clone()];
    reports.extend(hard);
    reports.extend(soft);
    Ok((
        reports,
        TradeoffCurve {
            instance: prep.instance.name().to_string(),
            points,
        },
    ))
}

/// Loads the dataset directory and runs [`run_benchmark_on`].
pub fn run_benchmark(config: &ExperimentConfig, backend: &dyn MilpBackend) -> Result<BenchOutcome> {
    config.validate()?;
    let instances = load_dataset(&config.dataset)?;
    run_benchmark_on(&instances, config, backend)
}

/// Solves every instance exactly, splits by (cached) runtime, trains on the
/// fast split and sweeps thresholds on the slow split. Per-instance errors
/// are collected in `failures`; files are written to `config.out`.
pub fn run_benchmark_on(
    instances: &[SteinerInstance],
    config: &ExperimentConfig,
    backend: &dyn MilpBackend,
) -> Result<BenchOutcome> {
    config.validate()?;
    let mut seen = BTreeSet::new();
    for inst in instances {
        if !seen.insert(inst.name()) {
            return Err(Error::InvalidParameter(format!("duplicate instance name {:?}", inst.name())));
        }
    }
    let out = &config.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let opts = config.pipeline();

    let mut sorted: Vec<&SteinerInstance> = instances.iter().collect();
    sorted.sort_by(|a, b| a.name().cmp(b.name()));
    let stage: Vec<_> = pool.install(|| {
        sorted
            .par_iter()
            .map(|inst| stage1(inst, backend, &opts))
            .collect()
    });
    let mut failures = Vec::new();
    let mut ready: BTreeMap<String, Stage1> = BTreeMap::new();
    for s in stage {
        match s {
            Ok(s) => {
                ready.insert(s.prep.instance.name().to_string(), s);
            }
            Err(f) => failures.push(f),
        }
    }

    let manifest_path = config.manifest_path();
    let mut runtimes = read_manifest(&manifest_path)?;
    let before = runtimes.len();
    for (name, s) in &ready {
        runtimes.entry(name.clone()).or_insert(s.original.solve_time);
    }
    if runtimes.len() != before {
        write_manifest(&manifest_path, &runtimes)?;
    }
    for (name, s) in &ready {
        write_rows_file(out.join(format!("features_{name}.csv")), &s.prep.rows)?;
    }

    let names: Vec<String> = ready.keys().cloned().collect();
    let (train_names, mut test_names) = split_dataset(&names, &runtimes, config.split_ratio)?;
    test_names.sort();
    let mut train_sorted = train_names.clone();
    train_sorted.sort();
    let train_rows: Vec<_> = train_sorted
        .iter()
        .flat_map(|n| ready[n].prep.rows.iter().cloned())
        .collect();
    let model = train(&train_rows, config.classifier, &config.hyperparams, config.seed)?;
    model.save(out.join("model.txt"))?;
    let importance = feature_importance(&model, &train_rows);
    write_importance(&out.join("importance.csv"), &importance)?;

    let results: Vec<_> = pool.install(|| {
        test_names
            .par_iter()
            .map(|n| (n, run_test_instance(&ready[n], &model, config, backend)))
            .collect()
    });
    let mut reports = Vec::new();
    let mut curves = Vec::new();
    for (name, r) in results {
        match r {
            Ok((rs, curve)) => {
                reports.extend(rs);
                curves.push(curve);
            }
            Err(e) => failures.push(InstanceFailure {
                instance: name.clone(),
                stage: "prune",
                message: e.to_string(),
            }),
        }
    }
    failures.sort_by(|a, b| a.instance.cmp(&b.instance));

    let outcome = BenchOutcome {
        train: train_names,
        test: test_names,
        model: Some(model),
        importance,
        reports,
        curves,
        failures,
    };
    write_outputs(out, &outcome)?;
    Ok(outcome)
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_weight(x: Option<Weight>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_importance(path: &Path, importance: &[FeatureImportance]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "coefficient", "stddev", "importance", "rank"])?;
    let ranked = rank_by_magnitude(importance);
    for f in importance {
        let rank = ranked.iter().position(|r| r.feature == f.feature).unwrap_or(0) + 1;
        w.write_record([
            f.feature.clone(),
            f.coefficient.to_string(),
            f.stddev.to_string(),
            f.importance.to_string(),
            rank.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `reports.json`, `summary.csv`, `thresholds.csv`,
/// `tradeoff_<instance>.csv` and `failures.csv` (when non-empty).
pub fn write_outputs(out: &Path, outcome: &BenchOutcome) -> Result<()> {
    let path = out.join("reports.json");
    let json = serde_json::to_string_pretty(&outcome.reports)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    let path = out.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "instance",
        "mode",
        "threshold",
        "original_objective",
        "original_time",
        "objective",
        "feature_time",
        "solve_time",
        "objective_increase_pct",
        "runtime_decrease_pct",
        "prune_rate",
        "status",
    ])?;
    for r in &outcome.reports {
        w.write_record([
            r.instance.clone(),
            r.mode.to_string(),
            opt_f64(r.threshold),
            opt_weight(r.optimal_objective),
            opt_f64(r.original_time),
            opt_weight(r.objective),
            r.feature_time.to_string(),
            r.solve_time.to_string(),
            opt_f64(r.objective_increase_pct),
            opt_f64(r.runtime_decrease_pct),
            r.prune_rate.to_string(),
            r.status.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    for c in &outcome.curves {
        let path = out.join(format!("tradeoff_{}.csv", c.instance));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "threshold",
            "prune_rate",
            "repair_added",
            "objective",
            "optimal_objective",
            "objective_increase_pct",
            "feature_time",
            "solve_time",
            "original_time",
            "runtime_decrease_pct",
            "status",
            "baseline_prune_rate",
            "baseline_objective",
            "baseline_solve_time",
        ])?;
        for p in &c.points {
            w.write_record([
                p.threshold.to_string(),
                p.prune_rate.to_string(),
                p.repair_added.to_string(),
                opt_weight(p.objective),
                opt_weight(p.optimal_objective),
                opt_f64(p.objective_increase_pct),
                p.feature_time.to_string(),
                p.solve_time.to_string(),
                p.original_time.to_string(),
                opt_f64(p.runtime_decrease_pct),
                p.status.to_string(),
                p.baseline_prune_rate.to_string(),
                opt_weight(p.baseline_objective),
                p.baseline_solve_time.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    let path = out.join("thresholds.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "threshold",
        "instances",
        "mean_prune_rate",
        "median_gap_pct",
        "mean_feature_time",
        "mean_solve_time",
        "mean_original_time",
        "baseline_not_worse",
    ])?;
    for s in outcome.threshold_summaries() {
        w.write_record([
            s.threshold.to_string(),
            s.instances.to_string(),
            s.mean_prune_rate.to_string(),
            s.median_gap_pct.to_string(),
            s.mean_feature_time.to_string(),
            s.mean_solve_time.to_string(),
            s.mean_original_time.to_string(),
            s.baseline_not_worse.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = out.join("failures.csv");
    if outcome.failures.is_empty() {
        if path.exists() {
            std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    } else {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["instance", "stage", "message"])?;
        for f in &outcome.failures {
            w.write_record([f.instance.as_str(), f.stage, f.message.as_str()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
