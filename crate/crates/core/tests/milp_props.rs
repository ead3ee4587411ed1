use proptest::prelude::*;

use steiner_prune::graph::{terminals_connected, to_directed, validate_tree, DirectedInstance};
use steiner_prune::milp::{
    apply_hard_prune, apply_soft_prune, build_model, extract_tree, solve, Mode,
};
use steiner_prune::oracle::{dreyfus_wagner, random_instance};
use steiner_prune::{HighsBackend, SolveOptions, SolveStatus, SteinerInstance};

fn arb_instance() -> impl Strategy<Value = SteinerInstance> {
    (4usize..11, 0.15f64..0.6, 2usize..5, any::<u64>())
        .prop_map(|(n, p, t, seed)| random_instance(n, p, t.min(n), (1, 10), seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ilp_matches_oracle_and_bounds_lp(inst in arb_instance()) {
        let b = HighsBackend::default();
        let d = to_directed(&inst, inst.terminals()[0]).unwrap();
        let ilp = solve(&build_model(&d, Mode::Integral).unwrap(), &SolveOptions::default(), &b).unwrap();
        let lp = solve(&build_model(&d, Mode::Relaxed).unwrap(), &SolveOptions::default(), &b).unwrap();
        let tree = extract_tree(&inst, &ilp).unwrap();
        validate_tree(&inst, &tree.edges).unwrap();
        prop_assert_eq!(tree.weight, dreyfus_wagner(&inst).unwrap().weight);
        prop_assert!(lp.objective <= ilp.objective + 1e-6);
    }

    #[test]
    fn hard_prune_never_beats_optimum(inst in arb_instance(), picks in prop::collection::vec(any::<bool>(), 64)) {
        let b = HighsBackend::default();
        let d = to_directed(&inst, inst.terminals()[0]).unwrap();
        let base = build_model(&d, Mode::Integral).unwrap();
        let optimum = extract_tree(&inst, &solve(&base, &SolveOptions::default(), &b).unwrap()).unwrap().weight;
        let pruned: Vec<usize> = (0..inst.edge_count()).filter(|&e| picks[e % picks.len()]).collect();
        let arcs: Vec<usize> = pruned.iter().flat_map(|&e| DirectedInstance::arcs_of(e)).collect();
        let kept: Vec<usize> = (0..inst.edge_count()).filter(|e| !pruned.contains(e)).collect();

        let r = solve(&apply_hard_prune(base.clone(), &arcs), &SolveOptions::default(), &b).unwrap();
        if terminals_connected(&inst, kept.iter().copied()) {
            let tree = extract_tree(&inst, &r).unwrap();
            prop_assert!(tree.weight >= optimum);
            prop_assert!(tree.edges.iter().all(|e| kept.contains(e)));
        } else {
            prop_assert_eq!(r.status, SolveStatus::Infeasible);
        }

        // A budget covering every pruned edge restores the optimum.
        let soft = solve(&apply_soft_prune(base, &arcs, pruned.len() as u64), &SolveOptions::default(), &b).unwrap();
        prop_assert_eq!(extract_tree(&inst, &soft).unwrap().weight, optimum);
    }
}
