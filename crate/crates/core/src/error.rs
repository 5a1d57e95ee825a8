use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {residual:.3e}, tol {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state is numerically singular (min eigenvalue {min_eig:.3e})")]
    SingularState { min_eig: f64 },

    #[error(
        "central eigenvalue clustering still ambiguous after {attempts} random retries \
         (smallest inter-cluster gap {min_gap:.3e}, cluster tol {tol:.3e})"
    )]
    NumericalDegeneracy {
        attempts: usize,
        min_gap: f64,
        tol: f64,
    },

    #[error("minimal subalgebra did not stabilize within the grid refinement budget")]
    AlgebraNotStabilized,

    #[error(
        "block states omega disagree across parameters (max deviation {deviation:.3e}, tol {tol:.3e})"
    )]
    OmegaInconsistent { deviation: f64, tol: f64 },

    #[error("experiments carry different parameter label sets")]
    LabelMismatch,

    #[error("input is not a minimal form: a non-identity state-preserving channel exists")]
    NotMinimalForm,

    #[error("linear program is unbounded along ray {ray:?}")]
    Unbounded { ray: Vec<f64> },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Exit code the CLI maps this error to: 1 for malformed input,
    /// 2 for numerical validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch(_) | Error::LabelMismatch | Error::InvalidInput(_) => 1,
            _ => 2,
        }
    }
}
