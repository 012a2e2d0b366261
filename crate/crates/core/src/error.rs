use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wavelength {wavelength_nm} nm outside the transparency window [{lo_nm}, {hi_nm}] nm")]
    OutOfWindow {
        wavelength_nm: f64,
        lo_nm: f64,
        hi_nm: f64,
    },
    #[error("no sign change of {what} on the search interval")]
    NoSignChange { what: &'static str },
    #[error("no group-velocity match between the pump and the {0} wave")]
    NoMatch(&'static str),
    #[error("evanescent wave: q^2 = {q2} exceeds k^2 = {k2}")]
    EvanescentWave { q2: f64, k2: f64 },
    #[error("profile never drops below half maximum on one side")]
    NoHalfCrossing,
    #[error("gain fit diverged (relative residual {0:.3e})")]
    FitDiverged(f64),
    #[error("joint spectral amplitude requires a pump duration")]
    MissingPumpDuration,
    #[error("kernel is identically zero")]
    DegenerateKernel,
    #[error("ensemble too small: covariance rank {rank} below {requested} requested modes")]
    InsufficientEnsemble { rank: usize, requested: usize },
    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureNotConverged { a: f64, b: f64 },
    #[error("mean of the ensemble is zero")]
    ZeroMean,
    #[error("correlation map is not ring-like (ridge residual {0:.3})")]
    NotRingLike(f64),
    #[error("every sample sits at the lower cutoff")]
    AllAtBoundary,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
