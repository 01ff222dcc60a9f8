use thiserror::Error;

/// Errors produced by the credit-network library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown node id {node} (network has {n} nodes)")]
    UnknownNode { node: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),

    #[error("edge ({0}, {1}) has zero total credit")]
    ZeroTotalEdge(usize, usize),

    #[error("negative capacity on edge ({0}, {1})")]
    NegativeCapacity(usize, usize),

    #[error("no edge between {0} and {1}")]
    MissingEdge(usize, usize),

    #[error("invalid transaction: {0}")]
    InvalidTransaction(String),

    #[error("path is infeasible: edge {from}->{to} has capacity {available}, payment needs {needed}")]
    InfeasiblePath {
        from: usize,
        to: usize,
        available: u64,
        needed: u64,
    },

    #[error("state does not match network: {0}")]
    StateMismatch(String),

    #[error("invalid topology spec: {0}")]
    InvalidSpec(String),

    #[error("could not sample a connected graph after {0} attempts")]
    Disconnected(usize),

    #[error("invalid transaction matrix: {0}")]
    InvalidLambda(String),

    #[error("state space of {required} states exceeds cap {cap}")]
    StateSpaceTooLarge { required: u128, cap: u128 },

    #[error("{units} unit edges exceed forest-count cap {cap}")]
    ForestCapExceeded { units: usize, cap: usize },

    #[error("class invariant violated: {0}")]
    ClassVerification(String),

    #[error("chain is reducible: {accessible} classes accessible from the initial class, {returning} of them communicate with it")]
    Reducible { accessible: usize, returning: usize },

    #[error("chain is periodic with period {0}")]
    Periodic(usize),

    #[error("stationary solve did not reach tolerance {tolerance:e} (residual {residual:e})")]
    NotConverged { tolerance: f64, residual: f64 },

    #[error("invalid formula input: {0}")]
    InvalidFormula(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
