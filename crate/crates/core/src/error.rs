use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("characteristic exponent alpha = {0} is outside (0, 2]")]
    InvalidAlpha(f64),
    #[error("dispersion gamma = {0} must be positive")]
    InvalidDispersion(f64),
    #[error("noise kind mismatch: expected {expected}, got {found}")]
    NoiseKindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("fractional moment order p = {p} must lie in (0, alpha = {alpha})")]
    InfiniteMoment { p: f64, alpha: f64 },
    #[error("alpha = {0} is outside the open interval (1, 2)")]
    AlphaOutsideOneTwo(f64),
    #[error("{users} users cannot share {tau} orthogonal pilots")]
    TooManyUsers { users: usize, tau: usize },
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("precoder column {column} has norm {norm}, expected 1")]
    NonUnitPrecoder { column: usize, norm: f64 },
    #[error("matrix is rank deficient ({0})")]
    RankDeficient(&'static str),
    #[error("empty sample batch for user {0}")]
    EmptyBatch(usize),
    #[error("target {target} is not bracketed by the supplied curve")]
    NotBracketed { target: f64 },
    #[error("invalid parity-check matrix: {0}")]
    InvalidParityMatrix(String),
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
