//! Learning to prune the Steiner tree problem.
//!
//! Instances are read from STP files, formulated as a multicommodity-flow
//! ILP, and solved through a pluggable MILP backend (HiGHS by default). Per
//! edge features (LP relaxation value, weight statistics, centralities) feed
//! a linear classifier whose low-scoring edges are fixed to zero before the
//! ILP is solved. Every edge carrying LP flow is kept, so pruning never makes
//! a connected instance infeasible.

pub mod bench;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod graph;
pub mod instance;
pub mod learn;
pub mod milp;
pub mod oracle;
pub mod prune;
pub mod stp;
pub mod weight;

pub use error::{Error, Result};
pub use instance::{Edge, EdgeId, NodeId, SteinerInstance};
pub use milp::{HighsBackend, MilpBackend, SolveOptions, SolveStatus, SteinerTree};
pub use weight::Weight;
