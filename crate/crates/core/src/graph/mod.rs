//! Directed conversion, connectivity and shortest paths.

pub mod centrality;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::instance::{EdgeId, NodeId, SteinerInstance};
use crate::weight::Weight;

pub use centrality::{
    betweenness_by_hops, betweenness_centrality, degree_centrality, eigenvector_centrality,
    CentralityOptions,
    CentralityTable,
};

pub type ArcId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub weight: Weight,
}

/// Arc-doubled view of an instance, rooted at one terminal.
///
/// Undirected edge `e = {u, v}` becomes arc `2e = (u, v)` and arc
/// `2e + 1 = (v, u)`, both carrying the edge weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedInstance {
    node_count: usize,
    arcs: Vec<Arc>,
    root: NodeId,
    commodities: Vec<NodeId>,
}

impl DirectedInstance {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Terminals other than the root, ascending; commodity `k` ships one unit
    /// from the root to `commodities()[k]`.
    pub fn commodities(&self) -> &[NodeId] {
        &self.commodities
    }

    /// Undirected edge an arc was created from.
    pub fn edge_of(&self, arc: ArcId) -> EdgeId {
        arc / 2
    }

    /// Both arcs of an undirected edge.
    pub fn arcs_of(edge: EdgeId) -> [ArcId; 2] {
        [2 * edge, 2 * edge + 1]
    }
}

pub fn to_directed(inst: &SteinerInstance, root: NodeId) -> Result<DirectedInstance> {
    if !inst.is_terminal(root) {
        return Err(Error::RootNotTerminal(root + 1));
    }
    let mut arcs = Vec::with_capacity(2 * inst.edge_count());
    for e in inst.edges() {
        arcs.push(Arc {
            tail: e.u,
            head: e.v,
            weight: e.weight,
        });
        arcs.push(Arc {
            tail: e.v,
            head: e.u,
            weight: e.weight,
        });
    }
    let commodities = inst
        .terminals()
        .iter()
        .copied()
        .filter(|&t| t != root)
        .collect();
    Ok(DirectedInstance {
        node_count: inst.node_count(),
        arcs,
        root,
        commodities,
    })
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// True iff every terminal lies in one component of the subgraph formed by
/// `active_edges`.
pub fn terminals_connected(
    inst: &SteinerInstance,
    active_edges: impl IntoIterator<Item = EdgeId>,
) -> bool {
    let mut sets = DisjointSets::new(inst.node_count());
    for e in active_edges {
        let edge = inst.edge(e);
        sets.union(edge.u, edge.v);
    }
    let terminals = inst.terminals();
    let root = sets.find(terminals[0]);
    terminals[1..].iter().all(|&t| sets.find(t) == root)
}

pub fn is_connected(inst: &SteinerInstance) -> bool {
    let mut sets = DisjointSets::new(inst.node_count());
    let mut components = inst.node_count();
    for e in inst.edges() {
        if sets.union(e.u, e.v) {
            components -= 1;
        }
    }
    components == 1
}

/// Checks that `edges` form a tree (acyclic, connected) spanning all terminals.
pub fn validate_tree(inst: &SteinerInstance, edges: &[EdgeId]) -> Result<()> {
    if edges.is_empty() {
        return if inst.terminals().len() == 1 {
            Ok(())
        } else {
            Err(Error::InvalidTree("no edges but several terminals".into()))
        };
    }
    let mut sets = DisjointSets::new(inst.node_count());
    let mut touched = vec![false; inst.node_count()];
    for &e in edges {
        let edge = inst.edge(e);
        if !sets.union(edge.u, edge.v) {
            return Err(Error::InvalidTree(format!(
                "cycle through edge {{{}, {}}}",
                edge.u + 1,
                edge.v + 1
            )));
        }
        touched[edge.u] = true;
        touched[edge.v] = true;
    }
    let root = sets.find(inst.edge(edges[0]).u);
    let nodes: Vec<NodeId> = (0..inst.node_count()).filter(|&v| touched[v]).collect();
    if nodes.iter().any(|&v| sets.find(v) != root) {
        return Err(Error::InvalidTree("edge set is not connected".into()));
    }
    if let Some(&t) = inst.terminals().iter().find(|&&t| sets.find(t) != root) {
        return Err(Error::InvalidTree(format!("terminal {} not spanned", t + 1)));
    }
    Ok(())
}

/// Reduces an edge set that connects all terminals to a Steiner tree: keeps a
/// lightest spanning forest, then strips non-terminal leaves repeatedly.
/// Output edge ids are sorted.
pub fn prune_to_tree(inst: &SteinerInstance, edges: &[EdgeId]) -> Vec<EdgeId> {
    let mut sorted: Vec<EdgeId> = edges.to_vec();
    sorted.sort_by_key(|&e| (inst.edge(e).weight, e));
    sorted.dedup();
    let mut sets = DisjointSets::new(inst.node_count());
    let mut keep: Vec<EdgeId> = sorted
        .into_iter()
        .filter(|&e| sets.union(inst.edge(e).u, inst.edge(e).v))
        .collect();
    let mut degree = vec![0usize; inst.node_count()];
    for &e in &keep {
        degree[inst.edge(e).u] += 1;
        degree[inst.edge(e).v] += 1;
    }
    loop {
        let before = keep.len();
        keep.retain(|&e| {
            let edge = inst.edge(e);
            let leaf = |v: NodeId| degree[v] == 1 && !inst.is_terminal(v);
            if leaf(edge.u) || leaf(edge.v) {
                degree[edge.u] -= 1;
                degree[edge.v] -= 1;
                false
            } else {
                true
            }
        });
        if keep.len() == before {
            break;
        }
    }
    keep.sort_unstable();
    keep
}

/// Single-source shortest paths over integer weight units.
///
/// Returns distances (`None` when unreachable) and the predecessor edge of
/// each node. Among equal-length paths the predecessor with the smallest
/// edge id wins, so paths are deterministic.
pub fn dijkstra(
    inst: &SteinerInstance,
    source: NodeId,
) -> (Vec<Option<i64>>, Vec<Option<EdgeId>>) {
    let n = inst.node_count();
    let mut dist: Vec<Option<i64>> = vec![None; n];
    let mut pred: Vec<Option<EdgeId>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0);
    heap.push(Reverse((0i64, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &e in inst.incident(v) {
            let w = inst.edge(e).other(v);
            if done[w] {
                continue;
            }
            let nd = d + inst.edge(e).weight.units();
            match dist[w] {
                Some(old) if old < nd => {}
                Some(old) if old == nd => {
                    if pred[w].is_some_and(|p| e < p) {
                        pred[w] = Some(e);
                    }
                }
                _ => {
                    dist[w] = Some(nd);
                    pred[w] = Some(e);
                    heap.push(Reverse((nd, w)));
                }
            }
        }
    }
    (dist, pred)
}
