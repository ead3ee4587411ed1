use std::path::PathBuf;

use crate::stp::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("node {0} is not a terminal")]
    RootNotTerminal(usize),

    #[error("graph has a single node; centrality is undefined")]
    SingleNodeGraph,

    #[error("edge {edge} has nonpositive weight {weight}; betweenness needs positive distances")]
    NonPositiveWeight { edge: usize, weight: String },

    #[error("eigenvector centrality did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("model has no commodities (single-terminal instance)")]
    NoCommodities,

    #[error("solver backend failed: {0}")]
    Backend(String),

    #[error("solver reported the model infeasible")]
    Infeasible,

    #[error("solution is not a valid Steiner tree: {0}")]
    InvalidTree(String),

    #[error("{0} terminals exceed the exact-oracle cap of {1}")]
    TooManyTerminals(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("expected a relaxed (LP) solve result")]
    NotRelaxed,

    #[error("feature data missing: {0}")]
    MissingFeature(String),

    #[error("training data: {0}")]
    TrainingData(String),

    #[error("feature dimension mismatch: model has {expected}, row has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("reports belong to different instances: {0} vs {1}")]
    InstanceMismatch(String, String),

    #[error("no runtime recorded for instance {0}")]
    MissingRuntime(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
