use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gate {kind} is not part of the gate set")]
    GateNotInSet { kind: String },
    #[error("circuit has {gates} gates but only {max} positions are available")]
    TooManyGates { gates: usize, max: usize },
    #[error("qubit index {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid column {column}: {reason}")]
    InvalidColumn { column: usize, reason: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot decode an angle from a zero vector")]
    UndefinedAngle,
    #[error("schedule fit did not converge (best residual {residual:.4})")]
    NonConvergence { residual: f64 },
    #[error("non-finite loss at batch element {index}")]
    NonFiniteLoss { index: usize },
    #[error("training diverged at step {step}")]
    Diverged {
        step: usize,
        last_good: Box<crate::denoiser::ToyDenoiser>,
    },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for failures of the numerical kind (divergence, non-convergence,
    /// non-finite values), as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NonFiniteLoss { .. }
                | Error::Diverged { .. }
                | Error::NotUnitary { .. }
                | Error::UndefinedAngle
        )
    }
}
