use proptest::prelude::*;

use steiner_prune::fixtures::{g1, g3};
use steiner_prune::oracle::random_instance;
use steiner_prune::stp::{parse_instance, read_instance, serialize_instance, write_instance};
use steiner_prune::{Edge, SteinerInstance, Weight};

#[test]
fn g1_round_trips() {
    let g = g1();
    assert_eq!(parse_instance(&serialize_instance(&g)).unwrap(), g);
}

#[test]
fn g3_serializes_single_edge_line() {
    let text = serialize_instance(&g3());
    assert_eq!(text.lines().filter(|l| l.trim() == "E 1 2 5").count(), 1);
}

#[test]
fn empty_terminals_rejected_before_serialization() {
    let r = SteinerInstance::new("x", 2, vec![Edge::new(0, 1, Weight::from_int(1))], []);
    assert!(r.is_err());
}

#[test]
fn file_round_trip_uses_stem_without_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b01.stp");
    std::fs::write(
        &path,
        "SECTION Graph\nNodes 2\nEdges 1\nE 1 2 5\nEND\nSECTION Terminals\nTerminals 2\nT 1\nT 2\nEND\nEOF\n",
    )
    .unwrap();
    let inst = read_instance(&path).unwrap();
    assert_eq!(inst.name(), "b01");
    let out = dir.path().join("copy.stp");
    write_instance(&out, &inst).unwrap();
    assert_eq!(read_instance(&out).unwrap(), inst);
}

fn arb_weight() -> impl Strategy<Value = Weight> {
    // Whole numbers and values with up to six decimals.
    prop_oneof![
        (0i64..100_000).prop_map(Weight::from_int),
        (0i64..10_000_000_000).prop_map(Weight::from_units),
    ]
}

fn arb_instance() -> impl Strategy<Value = SteinerInstance> {
    (2usize..20, 0.0f64..0.5, 1usize..6, any::<u64>(), prop::collection::vec(arb_weight(), 200))
        .prop_map(|(n, p, t, seed, ws)| {
            let base = random_instance(n, p, t.min(n), (1, 1), seed).unwrap();
            let edges = base
                .edges()
                .iter()
                .zip(ws.iter().cycle())
                .map(|(e, &w)| Edge::new(e.u, e.v, w))
                .collect();
            SteinerInstance::new(base.name(), n, edges, base.terminals().to_vec()).unwrap()
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(inst in arb_instance()) {
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn parser_never_panics(text in "(?s).{0,300}") {
        let _ = parse_instance(&text);
    }
}
