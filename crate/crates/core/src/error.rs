use thiserror::Error;

/// Errors raised by the folding engine.
#[derive(Debug, Error)]
pub enum KcmError {
    /// Malformed or inconsistent input, addressed by the offending field.
    #[error("invalid input at `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    /// Two interacting atoms came closer than the singularity floor.
    #[error("singular geometry: atoms {i} and {j} are {distance:.3e} Å apart")]
    Singular { i: usize, j: usize, distance: f64 },

    /// The QP weight matrix failed Cholesky factorization.
    #[error("weight matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    /// An iterative solver hit its iteration cap.
    #[error("{solver} did not converge within {iterations} iterations")]
    NoConvergence { solver: &'static str, iterations: usize },

    /// The torque vector vanished, so no normalized direction exists.
    #[error("torque vector is zero; the conformation is a stationary point")]
    ZeroTorque,

    #[error("failed to parse {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KcmError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        KcmError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors that come from numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            KcmError::Singular { .. }
                | KcmError::NotPositiveDefinite
                | KcmError::NoConvergence { .. }
                | KcmError::ZeroTorque
        )
    }
}

pub type Result<T> = std::result::Result<T, KcmError>;
