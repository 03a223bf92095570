use thiserror::Error;

/// Errors produced across the simulation, parsing and reduction layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension cap exceeded: {requested} qubits requested, cap is {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit index {index} out of range for a {width}-qubit register")]
    QubitOutOfRange { index: usize, width: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("no Uhlmann unitary: reduced states differ by {deviation:.3e}")]
    NoUhlmannUnitary { deviation: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("not a yes-instance: output deviates from maximally mixed by {deviation:.3e}")]
    NotYesInstance { deviation: f64 },

    #[error("graph with {n} vertices exceeds the brute-force limit of {max}")]
    GraphTooLarge { n: usize, max: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by a resource limit rather than malformed input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::DimensionCap { .. } | Error::GraphTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
