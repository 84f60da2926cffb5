use thiserror::Error;

/// Errors raised by the analysis and generation routines.
///
/// `Validation` covers violated preconditions on user input; `Computation`
/// covers failures that only show up while running (capacity, convergence,
/// windows that turn out to be too small).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("window too small to test denseness")]
    WindowTooSmallForDenseness,

    #[error("crop box exceeds the sample window")]
    CropOutsideWindow,

    #[error("radius exceeds sample")]
    RadiusExceedsSample,

    #[error("window too small for F(D): {0}")]
    WindowTooSmallForRepetitivity(String),

    #[error("windows too small to certify the hull metric: {0}")]
    WindowTooSmallForMetric(String),

    #[error("singular basis")]
    SingularBasis,

    #[error("degenerate window")]
    DegenerateWindow,

    #[error("substitution rule is not primitive")]
    NotPrimitive,

    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("need ≥ 2 sizes")]
    TooFewSizes,

    #[error("degenerate ensemble")]
    DegenerateEnsemble,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::CropOutsideWindow
                | Error::SingularBasis
                | Error::DegenerateWindow
                | Error::NotPrimitive
                | Error::UnknownAxiom(_)
                | Error::TooFewSizes
                | Error::Precondition(_)
                | Error::Parse { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
