use thiserror::Error;

/// Errors produced by the simulation and protocol toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chain length {0} is too small (need at least 3 spins)")]
    InvalidSize(usize),

    #[error("index {index} is out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("{kind} at dual site {site} is not enabled in the current configuration")]
    DisabledEvent { kind: &'static str, site: usize },

    #[error("invalid rate: {0}")]
    InvalidRate(String),

    #[error("non-finite or out-of-domain input: {0}")]
    Domain(String),

    #[error("invalid protocol parameters: {0}")]
    InvalidProtocol(String),

    #[error("gates {first} and {second} overlap within tick {tick}")]
    OverlappingSupport {
        tick: usize,
        first: usize,
        second: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("({0}, {1}) is not an edge of the graph")]
    NotAnEdge(usize, usize),

    #[error("search exhausted its budget of {0} nodes")]
    OutOfBudget(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("Markov chain is reducible")]
    Reducible,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("curve has no interior maximum")]
    NoInteriorMaximum,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
