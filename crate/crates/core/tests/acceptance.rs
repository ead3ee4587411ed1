//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 7-9 run on the `.stp` files in `$STEINLIB_DIR` when it is set
//! (instances solvable within the per-solve time limit), otherwise on a
//! seeded synthetic corpus of incidence-weighted instances with fractional
//! LP relaxations.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use steiner_prune::bench::{
    load_dataset, run_benchmark_on, synthetic_corpus, CorpusSpec, ExperimentConfig,
};
use steiner_prune::features::{FEATURE_COUNT, FEATURE_NAMES};
use steiner_prune::graph::{terminals_connected, to_directed, validate_tree};
use steiner_prune::learn::{feature_importance, logistic_loss_and_grad, Batch};
use steiner_prune::milp::{build_model, extract_tree, solve, Mode};
use steiner_prune::oracle::{dreyfus_wagner, random_instance};
use steiner_prune::prune::{
    make_mask, objective_increase_pct, prepare, runtime_decrease_pct, solve_hard,
    solve_instance, solve_original, solve_soft, PipelineOptions,
};
use steiner_prune::{HighsBackend, SolveOptions, SolveStatus, SteinerInstance};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn opts() -> SolveOptions {
    SolveOptions { time_limit: 60.0 }
}

/// The 200-instance corpus shared by criteria 1 and 2: n in 5..=12,
/// t in 2..=5, integer weights 1-10.
fn small_corpus() -> Vec<SteinerInstance> {
    (0..200u64)
        .map(|s| {
            let n = 5 + (s % 8) as usize;
            let t = 2 + (s % 4) as usize;
            random_instance(n, 0.35, t.min(n), (1, 10), 1000 + s).unwrap()
        })
        .collect()
}

fn criterion_1_and_2(b: &HighsBackend) -> (Verdict, Verdict) {
    let mut mismatches = Vec::new();
    let mut invalid = 0;
    let mut lp_violations = Vec::new();
    let mut max_lp_gap: f64 = 0.0;
    for inst in small_corpus() {
        let exact = dreyfus_wagner(&inst).unwrap().weight;
        let ilp = solve_instance(&inst, Mode::Integral, b, &opts()).unwrap();
        let tree = extract_tree(&inst, &ilp);
        match &tree {
            Ok(t) if validate_tree(&inst, &t.edges).is_ok() => {
                if t.weight != exact || ilp.status != SolveStatus::Optimal {
                    mismatches.push(format!("{}: ilp {} vs dw {}", inst.name(), t.weight, exact));
                }
            }
            _ => invalid += 1,
        }
        let lp = solve_instance(&inst, Mode::Relaxed, b, &opts()).unwrap();
        if lp.objective > exact.as_f64() + 1e-6 {
            lp_violations.push(format!("{}: lp {} > ilp {}", inst.name(), lp.objective, exact));
        }
        max_lp_gap = max_lp_gap.max(exact.as_f64() - lp.objective);
    }
    let c1 = verdict(
        mismatches.is_empty() && invalid == 0,
        format!(
            "200 instances, {} objective mismatches, {invalid} invalid trees {:?}",
            mismatches.len(),
            mismatches.first()
        ),
    );
    let c2 = verdict(
        lp_violations.is_empty(),
        format!(
            "{} LP > ILP violations, largest integrality gap {max_lp_gap}",
            lp_violations.len()
        ),
    );
    (c1, c2)
}

fn criterion_3(b: &HighsBackend) -> Verdict {
    let mut bad = Vec::new();
    let mut solves = 0;
    for s in 0..50u64 {
        let inst = random_instance(12, 0.3, 5, (1, 10), 5000 + s).unwrap();
        let mut objectives = Vec::new();
        for &root in inst.terminals() {
            let model = build_model(&to_directed(&inst, root).unwrap(), Mode::Integral).unwrap();
            let r = solve(&model, &opts(), b).unwrap();
            let tree = extract_tree(&inst, &r).unwrap();
            objectives.push(tree.weight);
            solves += 1;
        }
        if objectives.windows(2).any(|w| w[0] != w[1]) {
            bad.push(inst.name().to_string());
        }
    }
    verdict(
        bad.is_empty(),
        format!("50 instances, {solves} rooted solves, {} root-dependent {:?}", bad.len(), bad),
    )
}

fn random_scores(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| rng.gen::<f64>()).collect()
}

fn criterion_4(b: &HighsBackend) -> Verdict {
    let popts = PipelineOptions {
        solve: opts(),
        ..PipelineOptions::default()
    };
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut pruned_total = 0;
    for s in 0..100u64 {
        let n = 10 + (s % 11) as usize;
        let inst = random_instance(n, 0.25, 3 + (s % 5) as usize, (1, 20), 7000 + s).unwrap();
        let prep = prepare(&inst, None, b, &popts).unwrap();
        let scores = random_scores(inst.edge_count(), s);
        for tau in [0.3, 0.6, 0.9, 1.1] {
            runs += 1;
            let mask = make_mask(&scores, tau, &prep.lp_values);
            pruned_total += mask.pruned.len();
            if !terminals_connected(&inst, mask.retained.iter().copied()) {
                failures.push(format!("{} tau {tau}: retained graph disconnects terminals", inst.name()));
                continue;
            }
            match solve_hard(&inst, &mask, b, &opts()) {
                Ok(r) if r.status == SolveStatus::Optimal
                    && validate_tree(&inst, &r.tree_edges).is_ok()
                    && r.tree_edges.iter().all(|e| !mask.pruned.contains(e)) => {}
                Ok(r) => failures.push(format!("{} tau {tau}: status {} / bad tree", inst.name(), r.status)),
                Err(e) => failures.push(format!("{} tau {tau}: {e}", inst.name())),
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{runs} pruned solves ({pruned_total} edges pruned in total), {} failures {:?}",
            failures.len(),
            failures.first()
        ),
    )
}

fn criterion_5(b: &HighsBackend) -> Verdict {
    let popts = PipelineOptions {
        solve: opts(),
        ..PipelineOptions::default()
    };
    let mut failures = Vec::new();
    let mut strict = 0;
    // Fractional-LP instances, so the LP support is larger than the optimal
    // tree and the fixed mask can cut the optimum off.
    let spec = CorpusSpec {
        count: 50,
        nodes: 16,
        edges: 32,
        terminals: 5,
        seed: 9000,
        fractional_only: true,
    };
    for inst in synthetic_corpus(&spec, b, &opts()).unwrap() {
        let (orig, _) = solve_original(&inst, b, &opts()).unwrap();
        let optimum = orig.objective.unwrap();
        let prep = prepare(&inst, None, b, &popts).unwrap();
        // Fixed mask: every edge outside the LP support.
        let mask = make_mask(&vec![0.0; inst.edge_count()], 1.1, &prep.lp_values);
        let hard = solve_hard(&inst, &mask, b, &opts()).unwrap().objective.unwrap();
        let soft0 = solve_soft(&inst, &mask, 0, b, &opts()).unwrap().objective.unwrap();
        let soft1 = solve_soft(&inst, &mask, 1, b, &opts()).unwrap().objective.unwrap();
        let all = mask.pruned.len() as u64;
        let soft_all = solve_soft(&inst, &mask, all, b, &opts()).unwrap().objective.unwrap();
        let ok = optimum <= soft1 && soft1 <= soft0 && soft0 == hard && soft_all == optimum;
        if hard > optimum {
            strict += 1;
        }
        if !ok {
            failures.push(format!(
                "{}: opt {optimum} soft1 {soft1} soft0 {soft0} hard {hard} soft_all {soft_all}",
                inst.name()
            ));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "50 instances ({strict} with hard > optimum), {} violations {:?}",
            failures.len(),
            failures.first()
        ),
    )
}

fn criterion_6() -> Verdict {
    let rows = [
        ("i160-344", 8324.0, 8307.0, 27245.21, 54.17, 157.71, 0.20, 99.22),
        ("i160-345", 8327.0, 8327.0, 16396.92, 38.71, 29.46, 0.0, 99.58),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (name, pruned, orig, t_orig, t_feat, t_solve, want_obj, want_rt) in rows {
        let obj = objective_increase_pct(pruned, orig);
        let rt = runtime_decrease_pct(t_orig, t_feat, t_solve);
        pass &= (obj - want_obj).abs() <= 0.01 && (rt - want_rt).abs() <= 0.01;
        detail.push(format!("{name}: {obj:.4}% / {rt:.4}%"));
    }
    verdict(pass, detail.join(", "))
}

fn corpus(b: &HighsBackend) -> (Vec<SteinerInstance>, String) {
    if let Ok(dir) = std::env::var("STEINLIB_DIR") {
        let insts = load_dataset(std::path::Path::new(&dir)).expect("reading STEINLIB_DIR");
        return (insts, format!("STP files from {dir}"));
    }
    let spec = CorpusSpec {
        count: 55,
        nodes: 70,
        edges: 200,
        terminals: 10,
        seed: 1,
        fractional_only: true,
    };
    let insts = synthetic_corpus(&spec, b, &opts()).unwrap();
    (insts, "55 synthetic incidence instances".into())
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn criteria_7_to_9(b: &HighsBackend) -> (Verdict, Verdict, Verdict) {
    let (instances, source) = corpus(b);
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new(dir.path(), dir.path().join("out"));
    config.time_limit = 60.0;
    config.jobs = 1;
    config.thresholds = (0..=10).map(|i| i as f64 / 10.0).collect();
    let outcome = run_benchmark_on(&instances, &config, b).unwrap();
    let model = outcome.model.as_ref().unwrap();
    let fail_note = if outcome.failures.is_empty() {
        String::new()
    } else {
        let f = &outcome.failures[0];
        format!(
            ", {} instance failures (first: {} at {}: {})",
            outcome.failures.len(),
            f.instance,
            f.stage,
            f.message
        )
    };

    // 7: importance = coefficient x stddev, recomputed from the training rows.
    let train_rows: Vec<_> = outcome
        .train
        .iter()
        .flat_map(|n| {
            steiner_prune::features::read_rows_file(config.out.join(format!("features_{n}.csv"))).unwrap()
        })
        .collect();
    let imp = feature_importance(model, &train_rows);
    let mut max_err: f64 = 0.0;
    for (f, item) in imp.iter().enumerate() {
        let col: Vec<f64> = train_rows.iter().map(|r| r.features[f]).collect();
        let sd = population_std(&col);
        let coef = if model.stds[f] > 0.0 { model.weights[f] / model.stds[f] } else { 0.0 };
        max_err = max_err.max((item.importance - coef * sd).abs());
    }
    let top = (0..FEATURE_COUNT)
        .max_by(|&a, &c| imp[a].importance.abs().total_cmp(&imp[c].importance.abs()))
        .unwrap();
    let c7 = verdict(
        max_err <= 1e-9 && FEATURE_NAMES[top] == "lp_value",
        format!(
            "{source}; max |importance - coef*std| = {max_err:.2e}; top feature {} ({:.4})",
            FEATURE_NAMES[top], imp[top].importance
        ),
    );

    // 8: some threshold with mean prune rate >= 0.5, median gap <= 1 %,
    // mean pruned solve time <= 50 % of the original.
    let summaries = outcome.threshold_summaries();
    let good = summaries.iter().find(|s| {
        s.mean_prune_rate >= 0.5 && s.median_gap_pct <= 1.0 && s.mean_solve_time <= 0.5 * s.mean_original_time
    });
    let best_line = |s: &steiner_prune::bench::ThresholdSummary| {
        format!(
            "tau {} prune {:.3} median gap {:.3}% solve {:.3}s vs {:.3}s (+features {:.3}s)",
            s.threshold,
            s.mean_prune_rate,
            s.median_gap_pct,
            s.mean_solve_time,
            s.mean_original_time,
            s.mean_feature_time
        )
    };
    let c8 = match good {
        Some(s) => verdict(true, format!("{} test instances{fail_note}; {}", outcome.test.len(), best_line(s))),
        None => verdict(
            false,
            format!(
                "{} test instances{fail_note}; no qualifying threshold; at largest tau {}",
                outcome.test.len(),
                summaries.last().map(best_line).unwrap_or_default()
            ),
        ),
    };

    // 9: classifier vs LP baseline at matched prune counts.
    let mut cases = 0;
    let mut wins = 0;
    for c in &outcome.curves {
        for p in &c.points {
            if p.prune_rate == 0.0 {
                continue;
            }
            cases += 1;
            if let (Some(cl), Some(bl)) = (p.objective, p.baseline_objective) {
                if cl <= bl {
                    wins += 1;
                }
            } else if p.objective.is_some() {
                wins += 1;
            }
        }
    }
    let frac = if cases == 0 { 0.0 } else { wins as f64 / cases as f64 };
    let c9 = verdict(
        cases > 0 && frac >= 0.7,
        format!("classifier <= baseline in {wins}/{cases} matched cases ({:.1}%)", 100.0 * frac),
    );
    (c7, c8, c9)
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rows = rng.gen_range(5..40);
        let batch = Batch {
            x: (0..rows)
                .map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)))
                .collect(),
            y: (0..rows).map(|_| f64::from(rng.gen_range(0..2u8))).collect(),
            c: (0..rows).map(|_| rng.gen_range(0.5..2.0)).collect(),
        };
        let w: [f64; FEATURE_COUNT] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let bias = rng.gen_range(-1.0..1.0);
        let l2 = 1e-2;
        let (_, gw, gb) = logistic_loss_and_grad(&w, bias, &batch, l2);
        let h = 1e-5;
        let mut numeric = [0.0; FEATURE_COUNT + 1];
        for (j, g) in numeric.iter_mut().enumerate() {
            let (mut wp, mut wm, mut bp, mut bm) = (w, w, bias, bias);
            if j < FEATURE_COUNT {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fp = logistic_loss_and_grad(&wp, bp, &batch, l2).0;
            let fm = logistic_loss_and_grad(&wm, bm, &batch, l2).0;
            *g = (fp - fm) / (2.0 * h);
        }
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
    }
    verdict(worst < 1e-5, format!("20 batches, worst relative error {worst:.2e}"))
}

/// Runs a criterion group and appends its wall time to every verdict.
fn timed<T: Verdicts>(f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let mut out = f();
    let secs = start.elapsed().as_secs_f64();
    out.each(&mut |v| v.detail.push_str(&format!(" [{secs:.1} s]")));
    out
}

trait Verdicts {
    fn each(&mut self, f: &mut dyn FnMut(&mut Verdict));
}

impl Verdicts for Verdict {
    fn each(&mut self, f: &mut dyn FnMut(&mut Verdict)) {
        f(self)
    }
}

impl Verdicts for (Verdict, Verdict) {
    fn each(&mut self, f: &mut dyn FnMut(&mut Verdict)) {
        f(&mut self.0);
        f(&mut self.1);
    }
}

impl Verdicts for (Verdict, Verdict, Verdict) {
    fn each(&mut self, f: &mut dyn FnMut(&mut Verdict)) {
        f(&mut self.0);
        f(&mut self.1);
        f(&mut self.2);
    }
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture` or a filter;
    // a filter that does not mention this suite skips it.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let backend = HighsBackend::default();
    let start = Instant::now();
    let b = &backend;
    let (c1, c2) = timed(|| criterion_1_and_2(b));
    let c3 = timed(|| criterion_3(b));
    let c4 = timed(|| criterion_4(b));
    let c5 = timed(|| criterion_5(b));
    let c6 = timed(criterion_6);
    let (c7, c8, c9) = timed(|| criteria_7_to_9(b));
    let c10 = timed(criterion_10);
    let results = [
        (1, "oracle equivalence", c1),
        (2, "LP lower bound", c2),
        (3, "root invariance", c3),
        (4, "feasibility repair", c4),
        (5, "soft-prune sandwich", c5),
        (6, "metric arithmetic", c6),
        (7, "importance formula", c7),
        (8, "trade-off replication", c8),
        (9, "LP-baseline comparison", c9),
        (10, "logistic gradient check", c10),
    ];
    let mut all = true;
    for (id, name, v) in &results {
        all &= v.pass;
        println!(
            "criterion {id:>2} [{}] {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
