use thiserror::Error;

use crate::graph::Vertex;

/// Errors surfaced by the library.
///
/// Variants map onto CLI exit codes through [`Error::exit_code`]: budget and
/// usage problems are `2`, everything that signals a failed invariant is `1`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph is empty")]
    EmptyGraph,
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("self loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("vertex {0} out of range")]
    UnknownVertex(Vertex),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("geodesic enumeration cap of {cap} exceeded ({count} geodesics)")]
    EnumerationCapExceeded { cap: usize, count: u128 },
    #[error("vertex {vertex} is not an endpoint of both edges")]
    VertexNotOnEdges { vertex: Vertex },
    #[error("normal triangle construction failed for ({a}, {b}, {c}): {reason}")]
    ConstructionFailed {
        a: Vertex,
        b: Vertex,
        c: Vertex,
        reason: String,
    },
    #[error("function support reaches vertex {vertex} outside the class index (radius {max_n})")]
    SupportOutsideIndex { vertex: Vertex, max_n: u32 },
    #[error("function support contains vertex {0} outside the action domain")]
    SupportOutsideDomain(Vertex),
    #[error("input graph is not a tree")]
    NotATree,
    #[error("decomposition mismatch: {0}")]
    DecompositionMismatch(String),
    #[error("missing truncation data: {0}")]
    MissingTruncationData(String),
    #[error("decompositions do not cover class {0}")]
    IncompleteCover(String),
    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("partial action has an empty domain: {0}")]
    EmptyDomain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid argument: {0}")]
    Usage(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded(_)
            | Error::EnumerationCapExceeded { .. }
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Usage(_)
            | Error::EmptyGraph
            | Error::DisconnectedGraph { .. }
            | Error::SelfLoop(_)
            | Error::DuplicateEdge(..)
            | Error::UnknownVertex(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
