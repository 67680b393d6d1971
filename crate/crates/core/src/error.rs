use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input parameter (dimensions, physical constants, ranges).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A value outside the domain of a closed-form relation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Geometry or graph construction failed.
    #[error("construction failed: {0}")]
    Construction(String),

    /// A linear solve or factorization failed.
    #[error("linear solver failure: {0}")]
    Solver(String),

    /// Threshold estimation had nothing to estimate from.
    #[error("threshold estimation failed: {0}")]
    Estimation(String),

    /// Power-law fit had too few usable points.
    #[error("power-law fit failed: {0}")]
    Fit(String),

    /// Configuration file problems, all reported at once.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
