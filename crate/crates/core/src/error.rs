use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mass matrix is singular")]
    SingularMass,

    #[error("P(point) is numerically singular at {0}")]
    SingularAtPoint(Complex64),

    #[error("discrete transfer evaluated at z = 0")]
    ZeroPoint,

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("SVD failed to converge: {0}")]
    SvdFailure(String),

    #[error("eigenvalue solver failed to converge")]
    EigenFailure,

    #[error("non-finite iterate at step {step} ({side} side); the discrete system is probably unstable, check the discretization step")]
    NonFiniteIterate { step: usize, side: &'static str },

    #[error("angle tolerance not reached after {0} steps")]
    MaxStepsExceeded(usize),

    #[error("rank collapse: {0}")]
    RankCollapse(String),

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("system is not stable (spectral radius {0})")]
    UnstableSystem(f64),

    #[error("requested order {order} too large for state dimension {states}")]
    OrderTooLarge { order: usize, states: usize },

    #[error("invalid parameters: {0}")]
    BadParameters(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("missing file {0}")]
    MissingFile(String),

    #[error("{role}: expected {expected}, found {found}")]
    DimMismatch {
        role: String,
        expected: String,
        found: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad user input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::SingularMass
                | Error::DomainMismatch(_)
                | Error::NonPositiveStep(_)
                | Error::OrderTooLarge { .. }
                | Error::BadParameters(_)
                | Error::Parse { .. }
                | Error::MissingFile(_)
                | Error::DimMismatch { .. }
                | Error::Config(_)
                | Error::Io(_)
        )
    }

    /// Short class name used in report failure rows.
    pub fn class(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SingularMass => "SingularMass",
            Error::SingularAtPoint(_) => "SingularAtPoint",
            Error::ZeroPoint => "ZeroPoint",
            Error::DomainMismatch(_) => "DomainMismatch",
            Error::NonPositiveStep(_) => "NonPositiveStep",
            Error::SvdFailure(_) => "SvdFailure",
            Error::EigenFailure => "EigenFailure",
            Error::NonFiniteIterate { .. } => "NonFiniteIterate",
            Error::MaxStepsExceeded(_) => "MaxStepsExceeded",
            Error::RankCollapse(_) => "RankCollapse",
            Error::RankDeficient => "RankDeficient",
            Error::UnstableSystem(_) => "UnstableSystem",
            Error::OrderTooLarge { .. } => "OrderTooLarge",
            Error::BadParameters(_) => "BadParameters",
            Error::Parse { .. } => "ParseError",
            Error::MissingFile(_) => "MissingFile",
            Error::DimMismatch { .. } => "DimMismatch",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }
}
