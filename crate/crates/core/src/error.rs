use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole at {0}")]
    Pole(String),
    #[error("argument {arg} outside strip ({re_min}, {re_max})")]
    Domain { arg: String, re_min: f64, re_max: f64 },
    #[error("degenerate evaluation: {0}")]
    Degenerate(String),
    #[error("product did not converge: tail estimate {0:e}")]
    NonConvergence(f64),
    #[error("transform diverges: {0}")]
    DivergentTransform(String),
    #[error("spectral tail too fat: |g| = {value:e} at the line end (tol {tol:e})")]
    TailTooFat { value: f64, tol: f64 },
    #[error("line mismatch: function lives on Re s = {have}, needed {want}")]
    LineMismatch { have: f64, want: f64 },
    #[error("shifted line leaves the validity strip: {0}")]
    StripViolation(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("insufficient range: {0}")]
    InsufficientRange(String),
    #[error("contour passes through a pole of the integrand: {0}")]
    ContourPoleClash(String),
    #[error("source rejected: {0}")]
    Compatibility(String),
    #[error("degenerate family: {0}")]
    DegenerateFamily(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("grid is not strictly increasing at row {0}")]
    NonMonotoneGrid(usize),
    #[error("tail fit failed: {0}")]
    TailFitFailure(String),
    #[error("integral does not converge: {0}")]
    NonIntegrable(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    /// Tags the error with the pipeline stage it came from.
    pub fn at(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage: stage.into(), source: Box::new(e) },
        }
    }

    /// The error with any stage tag removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
