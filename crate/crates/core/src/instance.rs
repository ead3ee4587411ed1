//! The undirected Steiner tree instance.
//!
//! Node ids are 0-based everywhere inside the crate. The STP reader and the
//! CLI convert from/to the 1-based ids used in files.

use crate::error::{Error, Result};
use crate::weight::Weight;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: Weight,
}

impl Edge {
    pub fn new(u: NodeId, v: NodeId, weight: Weight) -> Self {
        Edge { u, v, weight }
    }

    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }

    fn key(&self) -> (NodeId, NodeId) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// Undirected weighted graph with a terminal set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinerInstance {
    name: String,
    node_count: usize,
    edges: Vec<Edge>,
    terminals: Vec<NodeId>,
    incidence: Vec<Vec<EdgeId>>,
}

impl SteinerInstance {
    /// Validates and builds an instance. Terminals are deduplicated and sorted.
    pub fn new(
        name: impl Into<String>,
        node_count: usize,
        edges: Vec<Edge>,
        terminals: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidInstance("node count must be positive".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut incidence = vec![Vec::new(); node_count];
        for (id, e) in edges.iter().enumerate() {
            if e.u >= node_count || e.v >= node_count {
                return Err(Error::InvalidInstance(format!(
                    "edge {} references node outside 1..={node_count}",
                    id + 1
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidInstance(format!("edge {} is a self-loop", id + 1)));
            }
            if e.weight.is_negative() {
                return Err(Error::InvalidInstance(format!(
                    "edge {} has negative weight",
                    id + 1
                )));
            }
            if !seen.insert(e.key()) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate edge {{{}, {}}}",
                    e.u + 1,
                    e.v + 1
                )));
            }
            incidence[e.u].push(id);
            incidence[e.v].push(id);
        }
        let mut terminals: Vec<NodeId> = terminals.into_iter().collect();
        terminals.sort_unstable();
        terminals.dedup();
        if terminals.is_empty() {
            return Err(Error::InvalidInstance("terminal set is empty".into()));
        }
        if let Some(&t) = terminals.iter().find(|&&t| t >= node_count) {
            return Err(Error::InvalidInstance(format!(
                "terminal {} outside 1..={node_count}",
                t + 1
            )));
        }
        Ok(SteinerInstance {
            name: name.into(),
            node_count,
            edges,
            terminals,
            incidence,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Sorted terminal node ids.
    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    pub fn is_terminal(&self, node: NodeId) -> bool {
        self.terminals.binary_search(&node).is_ok()
    }

    /// Edge ids incident to `node`, in edge order.
    pub fn incident(&self, node: NodeId) -> &[EdgeId] {
        &self.incidence[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.incidence[node].len()
    }

    pub fn find_edge(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.incidence
            .get(a)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].other(a) == b)
    }

    pub fn total_weight(&self, edges: impl IntoIterator<Item = EdgeId>) -> Weight {
        edges.into_iter().map(|e| self.edges[e].weight).sum()
    }

    /// Same graph and terminals with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: i64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.u, e.v, Weight::from_units(e.weight.units() * factor)))
            .collect();
        SteinerInstance::new(self.name.clone(), self.node_count, edges, self.terminals.clone())
    }
}
