use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use steiner_prune::fixtures::g1;
use steiner_prune::graph::{terminals_connected, validate_tree};
use steiner_prune::prune::{
    evaluate, lp_baseline_mask, make_mask, prepare, solve_hard, solve_original, solve_soft,
    PipelineOptions,
};
use steiner_prune::oracle::random_instance;
use steiner_prune::{HighsBackend, SolveOptions, Weight};

fn scores(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| rng.gen()).collect()
}

proptest! {
    #[test]
    fn mask_partitions_edges(
        s in prop::collection::vec(0.0f64..1.0, 1..60),
        lp_seed in any::<u64>(),
        tau in 0.0f64..1.2,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(lp_seed);
        let lp: Vec<f64> = s.iter().map(|_| if rng.gen_bool(0.6) { 0.0 } else { rng.gen() }).collect();
        let m = make_mask(&s, tau, &lp);
        let mut all: Vec<usize> = m.pruned.iter().chain(&m.retained).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..s.len()).collect::<Vec<_>>());
        prop_assert!(m.repair_added.iter().all(|e| m.retained.contains(e) && !m.pruned.contains(e)));
        prop_assert!(m.pruned.iter().all(|&e| s[e] < tau && lp[e] <= 1e-6));
        prop_assert!((0.0..=1.0).contains(&m.prune_rate()));
        // Prune rate is monotone in the threshold.
        let more = make_mask(&s, tau + 0.1, &lp);
        prop_assert!(more.pruned.len() >= m.pruned.len());
        let base = lp_baseline_mask(&lp, 1e-6);
        prop_assert!(m.pruned.iter().all(|e| base.pruned.contains(e)));
    }
}

#[test]
fn repaired_masks_keep_terminals_connected() {
    let b = HighsBackend::default();
    let opts = PipelineOptions::default();
    for seed in 0..40 {
        let inst = random_instance(14, 0.3, 5, (1, 20), 300 + seed).unwrap();
        let prep = prepare(&inst, None, &b, &opts).unwrap();
        let s = scores(inst.edge_count(), seed);
        for tau in [0.0, 0.25, 0.5, 0.75, 1.0 + 1e-9] {
            let m = make_mask(&s, tau, &prep.lp_values);
            assert!(terminals_connected(&inst, m.retained.iter().copied()));
        }
    }
}

#[test]
fn sandwich_and_report_consistency() {
    let b = HighsBackend::default();
    let opts = PipelineOptions::default();
    for seed in 0..15 {
        let inst = random_instance(12, 0.45, 5, (1, 10), 600 + seed).unwrap();
        let (orig, _) = solve_original(&inst, &b, &SolveOptions::default()).unwrap();
        let prep = prepare(&inst, None, &b, &opts).unwrap();
        let m = make_mask(&scores(inst.edge_count(), seed), 0.8, &prep.lp_values);
        let hard = solve_hard(&inst, &m, &b, &opts.solve).unwrap();
        validate_tree(&inst, &hard.tree_edges).unwrap();
        assert_eq!(
            hard.objective.unwrap(),
            inst.total_weight(hard.tree_edges.iter().copied())
        );
        let mut prev = hard.objective.unwrap();
        for budget in 0..4 {
            let soft = solve_soft(&inst, &m, budget, &b, &opts.solve).unwrap();
            let obj = soft.objective.unwrap();
            assert!(obj <= prev && obj >= orig.objective.unwrap());
            if budget == 0 {
                assert_eq!(obj, hard.objective.unwrap());
            }
            prev = obj;
        }
        let ev = evaluate(&hard, &orig).unwrap();
        let (p, o) = (hard.objective.unwrap().as_f64(), orig.objective.unwrap().as_f64());
        assert!((ev.objective_increase_pct.unwrap() - 100.0 * (p - o) / o).abs() < 1e-12);
        assert!(ev.objective_increase_pct.unwrap() >= 0.0);
    }
}

#[test]
fn g1_threshold_zero_matches_unpruned() {
    let b = HighsBackend::default();
    let prep = prepare(&g1(), None, &b, &PipelineOptions::default()).unwrap();
    let m = make_mask(&[0.9; 6], 0.0, &prep.lp_values);
    let r = solve_hard(&g1(), &m, &b, &SolveOptions::default()).unwrap();
    assert_eq!(r.objective, Some(Weight::from_int(3)));
    assert_eq!(r.prune_rate, 0.0);
}
