use thiserror::Error;

/// Errors raised by the quantization, solver, noise and fitting layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("branch transformation failed: {0}")]
    Transformation(String),

    #[error("capacitance matrix is ill-conditioned: {0}")]
    Conditioning(String),

    #[error("total-charge mode does not decouple (cross/diagonal ratio {ratio:.3e})")]
    DecouplingViolation { ratio: f64 },

    #[error("mode {mode} out of range for a {modes}-mode basis")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("assembled matrix is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("dimension {dim} exceeds configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("truncation did not converge up to n_max = {n_max} (last shift {shift:.3e} GHz)")]
    Truncation { n_max: usize, shift: f64 },

    #[error("sweep point {index} failed: {source}")]
    Sweep {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown operator tag `{0}`")]
    UnknownOperator(String),

    #[error("channel undefined: {0}")]
    UndefinedChannel(String),

    #[error("formula diverges: {0}")]
    Divergence(String),

    #[error("missing coupling coefficients: {0}")]
    MissingCoupling(&'static str),

    #[error("phase grid of {grid} points aliases charges up to |n| = {n_max} (need at least {required})")]
    Aliasing {
        grid: usize,
        n_max: usize,
        required: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("config error in {context}: {message}")]
    Config { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit status: 2 for bad configuration or input, 3 for
    /// numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::Truncation { .. } | Error::Divergence(_) => 3,
            Error::Sweep { source, .. } => source.exit_code(),
            Error::Io(_) => 4,
            Error::Csv(e) if e.is_io_error() => 4,
            _ => 2,
        }
    }

    /// True when the error (possibly wrapped by a sweep) is a numerical
    /// non-convergence rather than bad input.
    pub fn is_convergence_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::Truncation { .. } => true,
            Error::Sweep { source, .. } => source.is_convergence_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
