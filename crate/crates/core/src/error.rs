use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("qubit count {0} exceeds the supported maximum of {1}")]
    TooManyQubits(usize, usize),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("cannot parse Pauli word {0:?}")]
    WordSyntax(String),

    #[error("term {0} has an odd number of y factors; the sum is not a real hermitian operator")]
    NotHermitian(String),

    #[error("generator {0} must carry an odd number of y factors")]
    InvalidGenerator(String),

    #[error("{0} is not an X-string")]
    NotXString(String),

    #[error("operator contains off-diagonal term {0}")]
    NotDiagonal(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid active space: {0}")]
    InvalidWindow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ansatz length {0} exceeds the limit of {1} generators")]
    AnsatzTooLong(usize, usize),

    #[error("non-finite objective value at t = {0:?}")]
    NonFinite(Vec<f64>),

    #[error("term count {count} exceeds the budget of {budget}")]
    CapacityExceeded { count: usize, budget: usize },

    #[error("no eigenstates in sector {0}")]
    EmptySector(String),

    #[error("eigensolver did not converge (residual {0:e})")]
    NoConvergence(f64),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
