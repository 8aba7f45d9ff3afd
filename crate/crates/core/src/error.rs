use thiserror::Error;

/// Failures reported by the solver, its diagnostics and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the tubular neighbourhood where the retraction is defined.
    #[error("point at distance {distance:.3e} from the manifold exceeds tube radius {tube_radius:.3e}")]
    TubeExceeded { distance: f64, tube_radius: f64 },

    #[error("point is off the manifold (residual {residual:.3e} > {tolerance:.1e})")]
    OffManifold { residual: f64, tolerance: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("operation needs spatial dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The discrete solution left the projection domain or overflowed.
    #[error("discrete blow-up at t = {time:.6e}: {cause}")]
    DiscreteBlowup { time: f64, cause: Box<Error> },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// True for the error kinds that mean the discretization has left the
    /// regime where the geometry is well posed.
    pub fn is_blowup(&self) -> bool {
        matches!(
            self,
            Error::DiscreteBlowup { .. } | Error::TubeExceeded { .. } | Error::NonFinite(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
