use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use steiner_prune::bench::{
    parse_grid, run_benchmark, synthetic_corpus, CorpusSpec, ExperimentConfig,
};
use steiner_prune::features::{read_rows_file, write_rows_file};
use steiner_prune::learn::{
    feature_importance, predict, rank_by_magnitude, read_scores_csv, sweep_thresholds, train,
    ClassifierKind, Hyperparams, TrainedModel,
};
use steiner_prune::milp::Mode;
use steiner_prune::oracle::dreyfus_wagner;
use steiner_prune::prune::{
    evaluate, make_mask, prepare, solve_instance, solve_masked, solve_original, PipelineOptions,
};
use steiner_prune::stp::{read_instance, serialize_instance, write_instance};
use steiner_prune::{HighsBackend, SolveOptions};

#[derive(Parser)]
#[command(name = "steiner-prune", version, about = "Learning-to-prune for Steiner tree ILPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an STP file and print a summary (or the canonical form).
    Parse {
        file: PathBuf,
        #[arg(long)]
        canonical: bool,
    },
    /// Solve the full ILP and print a JSON report.
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
    },
    /// Solve the LP relaxation and print per-edge values as JSON.
    Relax {
        file: PathBuf,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
    },
    /// Write `features_<instance>.csv` for each input file.
    Features {
        files: Vec<PathBuf>,
        /// Solve the ILP and attach optimal-tree labels.
        #[arg(long)]
        label: bool,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Train a classifier on labelled feature CSVs.
    Train {
        features: Vec<PathBuf>,
        #[command(flatten)]
        learn: LearnArgs,
        #[arg(long, default_value = "model.txt")]
        out: PathBuf,
    },
    /// Prune one instance and solve the reduced ILP.
    PruneSolve {
        file: PathBuf,
        #[arg(long, required_unless_present = "scores")]
        model: Option<PathBuf>,
        /// External `instance,edge_id,score` CSV instead of a model.
        #[arg(long, conflicts_with = "model")]
        scores: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        soft_budget: Option<u64>,
        /// Also solve the unpruned ILP and fill the comparison metrics.
        #[arg(long)]
        compare: bool,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
    },
    /// Prune rate and false prunes per threshold on labelled feature CSVs.
    Sweep {
        features: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
        threshold_grid: String,
    },
    /// Full experiment: split, train, sweep and write report files.
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        learn: LearnArgs,
        #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
        threshold_grid: String,
        #[arg(long)]
        soft_budget: Vec<u64>,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 0.8)]
        split_ratio: f64,
        /// Runtime cache (default: runtimes.csv in the dataset directory).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Exact Dreyfus-Wagner solve (at most 16 terminals).
    Oracle { file: PathBuf },
    /// Write a synthetic incidence-weighted corpus as STP files.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 55)]
        count: usize,
        #[arg(long, default_value_t = 80)]
        nodes: usize,
        #[arg(long, default_value_t = 240)]
        edges: usize,
        #[arg(long, default_value_t = 12)]
        terminals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep instances whose LP relaxation is already integral.
        #[arg(long)]
        keep_integral: bool,
    },
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long, default_value = "logistic")]
    classifier: ClassifierKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    l2: f64,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5000)]
    max_epochs: usize,
    /// Mini-batch size; 0 trains on the full batch.
    #[arg(long, default_value_t = 0)]
    batch_size: usize,
}

impl LearnArgs {
    fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            l2: self.l2,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            ..Hyperparams::default()
        }
    }
}

fn solve_opts(time_limit: f64) -> Result<SolveOptions> {
    if time_limit.is_nan() || time_limit <= 0.0 {
        bail!("--time-limit must be positive");
    }
    Ok(SolveOptions { time_limit })
}

fn pipeline(time_limit: f64) -> Result<PipelineOptions> {
    Ok(PipelineOptions {
        solve: solve_opts(time_limit)?,
        ..PipelineOptions::default()
    })
}

fn load(path: &Path) -> Result<steiner_prune::SteinerInstance> {
    read_instance(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let backend = HighsBackend::default();
    match cli.command {
        Command::Parse { file, canonical } => {
            let inst = load(&file)?;
            if canonical {
                print!("{}", serialize_instance(&inst));
            } else {
                print_json(&json!({
                    "instance": inst.name(),
                    "nodes": inst.node_count(),
                    "edges": inst.edge_count(),
                    "terminals": inst.terminals().len(),
                    "total_weight": inst.total_weight(0..inst.edge_count()),
                }))?;
            }
        }
        Command::Solve { file, time_limit } => {
            let inst = load(&file)?;
            let (report, _) = solve_original(&inst, &backend, &solve_opts(time_limit)?)?;
            print_json(&report)?;
        }
        Command::Relax { file, time_limit } => {
            let inst = load(&file)?;
            let lp = solve_instance(&inst, Mode::Relaxed, &backend, &solve_opts(time_limit)?)?;
            let values = steiner_prune::features::lp_feature(&inst, &lp)?;
            print_json(&json!({
                "instance": inst.name(),
                "status": lp.status,
                "objective": lp.objective,
                "integral": lp.is_integral(),
                "solve_time": lp.wall_time,
                "lp_values": values,
            }))?;
        }
        Command::Features {
            files,
            label,
            time_limit,
            out,
        } => {
            std::fs::create_dir_all(&out)?;
            let opts = pipeline(time_limit)?;
            for file in files {
                let inst = load(&file)?;
                let tree = if label {
                    let (report, tree) = solve_original(&inst, &backend, &opts.solve)?;
                    match tree {
                        Some(t) if report.status == steiner_prune::SolveStatus::Optimal => Some(t),
                        _ => bail!("{}: ILP not solved to optimality, cannot label", inst.name()),
                    }
                } else {
                    None
                };
                let prep = prepare(&inst, tree.as_ref().map(|t| t.edges.as_slice()), &backend, &opts)?;
                let path = out.join(format!("features_{}.csv", inst.name()));
                write_rows_file(&path, &prep.rows)?;
                eprintln!("{} ({:.3} s)", path.display(), prep.feature_time);
            }
        }
        Command::Train {
            features,
            learn,
            out,
        } => {
            let mut rows = Vec::new();
            for f in &features {
                rows.extend(read_rows_file(f)?);
            }
            let model = train(&rows, learn.classifier, &learn.hyperparams(), learn.seed)?;
            model.save(&out)?;
            eprintln!("wrote {} ({} epochs)", out.display(), model.meta.epochs);
            println!("feature,coefficient,stddev,importance");
            for f in rank_by_magnitude(&feature_importance(&model, &rows)) {
                println!("{},{},{},{}", f.feature, f.coefficient, f.stddev, f.importance);
            }
        }
        Command::PruneSolve {
            file,
            model,
            scores,
            threshold,
            soft_budget,
            compare,
            time_limit,
        } => {
            let inst = load(&file)?;
            let opts = pipeline(time_limit)?;
            let prep = prepare(&inst, None, &backend, &opts)?;
            let edge_scores = match (model, scores) {
                (Some(m), _) => predict(&TrainedModel::load(&m)?, &prep.rows)?,
                (None, Some(s)) => {
                    let file = std::fs::File::open(&s).with_context(|| s.display().to_string())?;
                    let table = read_scores_csv(file)?;
                    let per_edge = table
                        .get(inst.name())
                        .with_context(|| format!("no scores for instance {}", inst.name()))?;
                    (0..inst.edge_count())
                        .map(|e| {
                            per_edge
                                .get(&e)
                                .copied()
                                .with_context(|| format!("no score for edge {}", e + 1))
                        })
                        .collect::<Result<Vec<f64>>>()?
                }
                (None, None) => bail!("one of --model or --scores is required"),
            };
            let mask = make_mask(&edge_scores, threshold, &prep.lp_values);
            let mut report = solve_masked(&prep, &mask, soft_budget, &backend, &opts.solve)?;
            if compare {
                let (original, _) = solve_original(&inst, &backend, &opts.solve)?;
                report = evaluate(&report, &original)?;
            }
            print_json(&report)?;
        }
        Command::Sweep {
            features,
            model,
            threshold_grid,
        } => {
            let model = TrainedModel::load(&model)?;
            let grid = parse_grid(&threshold_grid)?;
            let mut rows = Vec::new();
            for f in &features {
                rows.extend(read_rows_file(f)?);
            }
            println!("threshold,prune_rate,pruned,false_prunes,true_prunes,kept_positive,kept_negative");
            for p in sweep_thresholds(&model, &rows, &grid)? {
                println!(
                    "{},{},{},{},{},{},{}",
                    p.threshold,
                    p.prune_rate,
                    p.pruned,
                    p.false_prunes,
                    p.true_prunes,
                    p.kept_positive,
                    p.kept_negative
                );
            }
        }
        Command::Bench {
            dataset,
            learn,
            threshold_grid,
            soft_budget,
            time_limit,
            jobs,
            split_ratio,
            manifest,
            out,
        } => {
            let mut config = ExperimentConfig::new(dataset, out);
            config.classifier = learn.classifier;
            config.hyperparams = learn.hyperparams();
            config.seed = learn.seed;
            config.thresholds = parse_grid(&threshold_grid)?;
            config.soft_budgets = soft_budget;
            config.time_limit = time_limit;
            config.jobs = jobs;
            config.split_ratio = split_ratio;
            config.manifest = manifest;
            let outcome = run_benchmark(&config, &backend)?;
            eprintln!(
                "train {} / test {} instances; outputs in {}",
                outcome.train.len(),
                outcome.test.len(),
                config.out.display()
            );
            println!("threshold,instances,mean_prune_rate,median_gap_pct,mean_solve_time,mean_original_time");
            for s in outcome.threshold_summaries() {
                println!(
                    "{},{},{:.4},{:.4},{:.4},{:.4}",
                    s.threshold,
                    s.instances,
                    s.mean_prune_rate,
                    s.median_gap_pct,
                    s.mean_solve_time,
                    s.mean_original_time
                );
            }
            if !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!("FAILED {} [{}]: {}", f.instance, f.stage, f.message);
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Oracle { file } => {
            let inst = load(&file)?;
            let tree = dreyfus_wagner(&inst)?;
            print_json(&json!({
                "instance": inst.name(),
                "objective": tree.weight,
                "tree_edges": tree.edges.iter().map(|e| e + 1).collect::<Vec<_>>(),
            }))?;
        }
        Command::Generate {
            out,
            count,
            nodes,
            edges,
            terminals,
            seed,
            keep_integral,
        } => {
            let spec = CorpusSpec {
                count,
                nodes,
                edges,
                terminals,
                seed,
                fractional_only: !keep_integral,
            };
            std::fs::create_dir_all(&out)?;
            for inst in synthetic_corpus(&spec, &backend, &SolveOptions::default())? {
                write_instance(out.join(format!("{}.stp", inst.name())), &inst)?;
            }
            eprintln!("wrote {count} instances to {}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

