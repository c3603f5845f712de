use thiserror::Error;

/// Errors raised by constructions and certificates in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("tolerance {name} = {value:e} must lie in (0, 1e-3)")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("dimension d = {d} is not supported here: {reason}")]
    InvalidDimension { d: usize, reason: &'static str },

    #[error("expected {expected} Schmidt coefficients, got {found}")]
    WrongLength { expected: usize, found: usize },

    #[error("Schmidt coefficient {index} is negative ({value})")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("squared Schmidt coefficients sum to {sum}, which deviates from 1 by more than 1e-6")]
    NotNormalized { sum: f64 },

    #[error("Schmidt coefficient {index} is zero but a full-rank state is required")]
    RankDeficient { index: usize },

    #[error("operator label ({n}, {m}) is out of range for d = {d}")]
    LabelOutOfRange { n: usize, m: usize, d: usize },

    #[error("class index {n} is out of range for d = {d}")]
    ClassOutOfRange { n: usize, d: usize },

    #[error("p0 = {p0} lies outside (0, 1/{d}]")]
    P0OutOfRange { d: usize, p0: f64 },

    #[error("state vector is not normalized (norm {norm})")]
    NotUnitVector { norm: f64 },

    #[error("invalid range {from}..={to}")]
    InvalidRange { from: usize, to: usize },

    #[error("invalid POVM: element {element} has minimum eigenvalue {eigenvalue:.6e}")]
    InvalidPovm { element: String, eigenvalue: f64 },

    #[error("{0}")]
    InvalidInput(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
