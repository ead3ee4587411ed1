//! Exact ground truth for small instances and seeded instance generators.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{dijkstra, prune_to_tree};
use crate::instance::{Edge, EdgeId, NodeId, SteinerInstance};
use crate::milp::SteinerTree;
use crate::weight::Weight;

/// Largest terminal count [`dreyfus_wagner`] accepts.
pub const MAX_ORACLE_TERMINALS: usize = 16;

const INF: i64 = i64::MAX / 4;

/// Minimum Steiner tree by the Dreyfus–Wagner subset dynamic program,
/// `O(3^t n + 2^t n^2)`.
///
/// Ties are broken towards the lexicographically smallest (subset, vertex)
/// pair, so the recovered tree is deterministic.
pub fn dreyfus_wagner(inst: &SteinerInstance) -> Result<SteinerTree> {
    let terminals = inst.terminals();
    let t = terminals.len();
    if t > MAX_ORACLE_TERMINALS {
        return Err(Error::TooManyTerminals(t, MAX_ORACLE_TERMINALS));
    }
    if t == 1 {
        return Ok(SteinerTree::empty());
    }
    let n = inst.node_count();
    let mut dist = vec![INF; n * n];
    let mut pred: Vec<Vec<Option<EdgeId>>> = Vec::with_capacity(n);
    for s in 0..n {
        let (d, p) = dijkstra(inst, s);
        for (v, dv) in d.into_iter().enumerate() {
            dist[s * n + v] = dv.unwrap_or(INF);
        }
        pred.push(p);
    }
    if terminals.iter().any(|&x| dist[terminals[0] * n + x] >= INF) {
        return Err(Error::Disconnected);
    }

    let full = (1usize << t) - 1;
    let mut dp = vec![INF; (full + 1) * n];
    let mut via = vec![0u32; (full + 1) * n];
    let mut split = vec![0u32; (full + 1) * n];
    let mut merged = vec![INF; n];
    for mask in 1..=full {
        if mask.count_ones() == 1 {
            merged.iter_mut().for_each(|m| *m = INF);
            merged[terminals[mask.trailing_zeros() as usize]] = 0;
        } else {
            let low = mask & mask.wrapping_neg();
            for v in 0..n {
                let mut best = INF;
                let mut best_split = 0;
                // Descending submask walk with `<=` keeps the smallest minimiser.
                let mut s = (mask - 1) & mask;
                while s > 0 {
                    if s & low != 0 {
                        let val = dp[s * n + v].saturating_add(dp[(mask ^ s) * n + v]);
                        if val <= best {
                            best = val;
                            best_split = s;
                        }
                    }
                    s = (s - 1) & mask;
                }
                merged[v] = best.min(INF);
                split[mask * n + v] = best_split as u32;
            }
        }
        for v in 0..n {
            let mut best = INF;
            let mut best_u = 0;
            for (u, &m) in merged.iter().enumerate() {
                if m >= INF {
                    continue;
                }
                let val = m + dist[u * n + v];
                if val < best {
                    best = val;
                    best_u = u;
                }
            }
            dp[mask * n + v] = best;
            via[mask * n + v] = best_u as u32;
        }
    }

    let root = terminals[0];
    let objective = dp[full * n + root];
    let mut edges = BTreeSet::new();
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        let u = via[mask * n + v] as usize;
        let mut cur = v;
        while cur != u {
            let e = pred[u][cur].expect("reachable node has a predecessor");
            edges.insert(e);
            cur = inst.edge(e).other(cur);
        }
        if mask.count_ones() > 1 {
            let s = split[mask * n + u] as usize;
            stack.push((s, u));
            stack.push((mask ^ s, u));
        }
    }
    let edges: Vec<EdgeId> = edges.into_iter().collect();
    let tree = SteinerTree::from_edges(inst, prune_to_tree(inst, &edges));
    if tree.weight.units() != objective {
        return Err(Error::InvalidTree(format!(
            "backtracked tree weight {} differs from DP value {}",
            tree.weight,
            Weight::from_units(objective)
        )));
    }
    Ok(tree)
}

/// Seeded random connected instance: a random spanning tree, then each
/// remaining node pair joined with probability `edge_prob`. Weights are
/// integers drawn uniformly from `weight_range` (inclusive).
pub fn random_instance(
    n: usize,
    edge_prob: f64,
    t: usize,
    weight_range: (i64, i64),
    seed: u64,
) -> Result<SteinerInstance> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if t < 1 || t > n {
        return Err(Error::InvalidParameter(format!("need 1 <= t <= n, got t = {t}")));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidParameter(format!("edge_prob {edge_prob} outside [0, 1]")));
    }
    let (lo, hi) = weight_range;
    if lo < 0 || lo > hi {
        return Err(Error::InvalidParameter(format!("bad weight range {lo}..={hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| Weight::from_int(rng.gen_range(lo..=hi));

    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    for (u, v) in random_tree(n, &mut rng) {
        present[u * n + v] = true;
        present[v * n + u] = true;
        let w = weight(&mut rng);
        edges.push(Edge::new(u.min(v), u.max(v), w));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present[u * n + v] && rng.gen_bool(edge_prob) {
                let w = weight(&mut rng);
                edges.push(Edge::new(u, v, w));
            }
        }
    }
    let terminals = sample(&mut rng, n, t).into_vec();
    SteinerInstance::new(format!("rand-n{n}-t{t}-s{seed}"), n, edges, terminals)
}

/// Seeded incidence-weighted instance with `m` edges: a random spanning tree
/// plus distinct random extra pairs. An edge with `k` terminal endpoints gets
/// an integer weight drawn uniformly from `100(k+1) ± 10(k+1)`.
pub fn incidence_instance(n: usize, m: usize, t: usize, seed: u64) -> Result<SteinerInstance> {
    if n < 2 || t < 1 || t > n {
        return Err(Error::InvalidParameter(format!("need n >= 2 and 1 <= t <= n, got n = {n}, t = {t}")));
    }
    if m < n - 1 || m > n * (n - 1) / 2 {
        return Err(Error::InvalidParameter(format!("edge count {m} impossible for {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: BTreeSet<(NodeId, NodeId)> = random_tree(n, &mut rng)
        .into_iter()
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    while pairs.len() < m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let terminals = sample(&mut rng, n, t).into_vec();
    let mut is_terminal = vec![false; n];
    for &x in &terminals {
        is_terminal[x] = true;
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            let k = 1 + i64::from(is_terminal[u]) + i64::from(is_terminal[v]);
            let w = rng.gen_range(90 * k..=110 * k);
            Edge::new(u, v, Weight::from_int(w))
        })
        .collect();
    SteinerInstance::new(format!("inc-n{n}-m{m}-t{t}-s{seed}"), n, edges, terminals)
}

/// Random recursive tree over a random node order; returns its `n - 1` edges.
pub(crate) fn random_tree(n: usize, rng: &mut impl Rng) -> Vec<(NodeId, NodeId)> {
    let order = sample(rng, n, n).into_vec();
    (1..n)
        .map(|i| {
            let parent = order[rng.gen_range(0..i)];
            (parent, order[i])
        })
        .collect()
}
