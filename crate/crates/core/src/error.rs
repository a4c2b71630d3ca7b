use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),

    #[error("invalid weight matrix: {0}")]
    InvalidWeights(String),

    #[error("invalid sparsity pattern: {0}")]
    InvalidPattern(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{n} agents exceeds the enumeration limit of {limit}")]
    TooManyAgents { n: usize, limit: usize },

    /// The requested quantity belongs to the other equilibrium branch.
    #[error("wrong equilibrium regime: {0}")]
    WrongRegime(String),

    /// theta == N/2: both uniform profiles maximize the potential.
    #[error("theta = N/2 is a tie between the all-zeros and all-ones equilibria")]
    TieRegime,

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("sparsity pattern admits no connected graph")]
    DisconnectedPattern,

    #[error("invalid chain configuration: {0}")]
    InvalidChain(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
