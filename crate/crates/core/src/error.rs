use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("negative evolution time {0}")]
    NegativeTime(f64),
    #[error("vector is not normalized (norm {0})")]
    NotUnitVector(f64),
    #[error("matrix is not a proper rotation (orthogonality residual {residual:.3e}, det {det})")]
    NotSo3 { residual: f64, det: f64 },
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("epsilon must lie in (0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),
    #[error("controlled target must be special unitary (det = {re} + {im}i)")]
    NotSpecialUnitary { re: f64, im: f64 },
    #[error("gate {0} must be lowered before emission")]
    UnloweredGate(String),
    #[error("qubit index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("partial trace needs at least one kept qubit")]
    EmptyKeepSet,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonHermitianInput { .. } | Error::NotPsd { .. } => 3,
            Error::Internal(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
