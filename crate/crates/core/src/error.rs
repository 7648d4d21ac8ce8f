use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("{kind:?} gate has no unitary matrix")]
    NoMatrix { kind: crate::GateKind },
    #[error("width {width} exceeds the limit of {limit} qubits")]
    WidthLimit { width: usize, limit: usize },
    #[error("circuit contains a measurement")]
    ContainsMeasure,
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot serialize: {0}")]
    Unserializable(String),
    #[error("coupling graph: {0}")]
    Graph(String),
    #[error("mapping violation: {0}")]
    Mapping(String),
    #[error("synthesis: {0}")]
    Synthesis(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("circuit {index}: {source}")]
    Circuit {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}
