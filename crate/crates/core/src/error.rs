use std::path::PathBuf;

use thiserror::Error;

use crate::model::NodeId;

/// Errors produced by the simulator and its algorithms.
#[derive(Debug, Error)]
pub enum D2dError {
    #[error("node {0} not found")]
    NotFound(NodeId),

    #[error("node {0} already present in topology")]
    DuplicateNode(NodeId),

    #[error("topology corrupted at node {node}: {reason}")]
    TopologyCorruption { node: NodeId, reason: String },

    #[error("degenerate geometry between {a} and {b}: zero distance")]
    DegenerateGeometry { a: NodeId, b: NodeId },

    #[error("path has no links")]
    EmptyPath,

    #[error("stale decision for {ue}: {reason}")]
    StaleDecision { ue: NodeId, reason: String },

    #[error("event {got} arrived after {last} for agent {agent}")]
    Sequencing { agent: NodeId, last: u64, got: u64 },

    #[error("no plan bound to goal {0}")]
    MissingPlan(String),

    #[error("scenario must contain at least one UE")]
    EmptyScenario,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported scenario version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = D2dError> = std::result::Result<T, E>;
