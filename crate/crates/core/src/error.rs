use thiserror::Error;

/// Errors raised by the operator, divergence and certification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix must have dimension at least 1")]
    EmptyMatrix,

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("input is not Hermitian (deviation {deviation:e} exceeds {allowed:e})")]
    NonHermitianInput { deviation: f64, allowed: f64 },

    #[error("eigensolver did not converge for a {0}x{0} matrix")]
    EigensolverFailure(usize),

    #[error("not positive semidefinite (min eigenvalue {min:e}, allowed band {band:e})")]
    NotPositiveSemidefinite { min: f64, band: f64 },

    #[error("trace is {0}, expected 1")]
    NotUnitTrace(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("argument leaks outside the support of the base operator (relative leak {0:e})")]
    SupportMismatch(f64),

    #[error("parameter {name} = {value} is outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("quadrature did not converge within {nodes} nodes (last change {change:e})")]
    QuadratureNonConvergence { nodes: usize, change: f64 },

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("malformed matrix file: {0}")]
    MalformedMatrix(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input (as opposed to numerical failure).
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::EigensolverFailure(_) | Error::QuadratureNonConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
