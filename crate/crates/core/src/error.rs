use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("expectation value has imaginary part {imag:e}")]
    ComplexExpectation { imag: f64 },
    #[error("eigendecomposition failed")]
    EigenFailure,
    #[error("resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),
    #[error("the delta_s -> infinity limit is only valid for quasi-probability tables")]
    LimitResolution,
    #[error("invalid pointer grid {lo}:{hi}:{step}")]
    InvalidGrid { lo: f64, hi: f64, step: f64 },
    #[error("invalid outcome label: {0}")]
    InvalidLabel(String),
    #[error("expected a {expected} table or density, got {actual}")]
    WrongSystem {
        expected: &'static str,
        actual: &'static str,
    },
    #[error(
        "deconvolution design is ill-conditioned at delta_s = {delta_s} (condition number {condition:e})"
    )]
    IllConditioned { delta_s: f64, condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
