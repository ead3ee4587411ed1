//! Small hand-checkable instances used across tests and docs.

use crate::instance::{Edge, SteinerInstance};
use crate::weight::Weight;

fn build(name: &str, n: usize, edges: &[(usize, usize, i64)], terminals: &[usize]) -> SteinerInstance {
    let edges = edges
        .iter()
        .map(|&(u, v, w)| Edge::new(u - 1, v - 1, Weight::from_int(w)))
        .collect();
    SteinerInstance::new(name, n, edges, terminals.iter().map(|t| t - 1))
        .expect("fixture is valid")
}

/// Star with a Steiner centre: terminals 1, 2, 3 joined to node 4 by unit
/// edges and to each other by weight-3 edges. Optimum 3.
pub fn g1() -> SteinerInstance {
    build(
        "G1",
        4,
        &[(1, 4, 1), (2, 4, 1), (3, 4, 1), (1, 2, 3), (1, 3, 3), (2, 3, 3)],
        &[1, 2, 3],
    )
}

/// Path 1-2-3 of unit edges plus a direct 1-3 edge of weight 3; terminals 1, 3.
/// Optimum 2 through the Steiner node 2.
pub fn g2() -> SteinerInstance {
    build("G2", 3, &[(1, 2, 1), (2, 3, 1), (1, 3, 3)], &[1, 3])
}

/// Single edge of weight 5 between two terminals.
pub fn g3() -> SteinerInstance {
    build("G3", 2, &[(1, 2, 5)], &[1, 2])
}

/// Star K_{1,3} with centre 4 and unit weights; all leaves are terminals.
pub fn star() -> SteinerInstance {
    build("star", 4, &[(1, 4, 1), (2, 4, 1), (3, 4, 1)], &[1, 2, 3])
}
