//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: probability out of range: {value}")]
    ParseProb { line: usize, value: f64 },
    #[error("probability out of range: {0}")]
    ProbRange(f64),
    #[error("unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("vertex id {0} out of range")]
    VertexRange(usize),
    #[error("edge permutation is not a bijection over the edge ids")]
    BadPermutation,
    #[error("node limit exceeded ({0} nodes)")]
    NodeLimit(usize),
    #[error("node at level {level} violates the level ordering")]
    LevelOrder { level: u32 },
    #[error("raw diagram is cyclic or not ordered")]
    UnorderedDiagram,
    #[error("operands belong to different node stores")]
    StoreMismatch,
    #[error("search frontier exceeded 62 vertices; no usable edge ordering")]
    FrontierTooWide,
    #[error("seed set is empty")]
    EmptySeeds,
    #[error("graph has {0} edges; the enumeration guard allows at most {1}")]
    OracleGuard(usize, usize),
    #[error("impossible evidence: the conditioning event has probability zero")]
    ImpossibleEvidence,
    #[error("contradictory evidence: '{0}' is both influenced and uninfluenced")]
    ContradictoryEvidence(String),
    #[error("seed '{0}' cannot be marked uninfluenced")]
    SeedEvidence(String),
    #[error("family is empty; nothing to sample")]
    EmptyFamily,
    #[error("family has zero probability mass under the current probabilities")]
    ZeroMassFamily,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
