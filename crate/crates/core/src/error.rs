use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("matrix is not primitive (reducible or periodic)")]
    NotPrimitive,

    #[error("equilibrium solve is singular: {0}")]
    SingularSolve(String),

    #[error("contraction mode unavailable: {0}")]
    ModeUnavailable(String),

    #[error("vector is not normalized: pi . x = {0}")]
    NotNormalized(f64),

    #[error("tree would have {nodes} nodes, above the cap of {cap}")]
    SizeOverflow { nodes: u128, cap: u64 },

    #[error("edge channels do not share an equilibrium distribution: {0}")]
    MixedEquilibria(String),

    #[error("malformed tree spec: {0}")]
    MalformedSpec(String),

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("enumeration of {count} patterns exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u64 },

    #[error("state {state} outside alphabet 0..={max}")]
    StateOutOfRange { state: usize, max: usize },

    #[error("pattern has zero likelihood under every root state")]
    PatternImpossible,

    #[error("bad prior: {0}")]
    BadPrior(String),

    #[error("S = {0} outside the open interval (0, 2)")]
    SOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
