use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why soft outlier removal gave up.
#[derive(Clone, Debug, PartialEq)]
pub enum InfeasibleReason {
    /// Silencing the discovered cuts would push the total weight below `(1 - xi)|T|`.
    MassExhausted { mass: f64, required: f64 },
    /// The cut budget ran out before the separation oracle certified the weights.
    CutLimit { cuts: usize },
}

impl fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfeasibleReason::MassExhausted { mass, required } => write!(
                f,
                "mass constraint violated (total weight {mass:.6} < required {required:.6})"
            ),
            InfeasibleReason::CutLimit { cuts } => write!(f, "cut limit of {cuts} exhausted"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("zero vector where a unit direction is required")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("search ball does not meet the unit ball (|center| = {center_norm}, radius = {radius})")]
    EmptyIntersection { center_norm: f64, radius: f64 },

    #[error("rejection sampling exhausted: {accepted} of {requested} accepted after {attempts} attempts")]
    RejectionExhausted {
        attempts: u64,
        accepted: usize,
        requested: usize,
    },

    #[error("soft outlier removal infeasible: {0}")]
    Infeasible(InfeasibleReason),

    #[error("unknown label token")]
    UnknownToken,

    #[error("label token already revealed")]
    TokenAlreadyRevealed,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("diagnostics were not enabled for this run")]
    DiagnosticsDisabled,

    #[error("phase {phase}: {source}")]
    Phase {
        phase: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for outlier-removal infeasibility, including when wrapped in a phase error.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Infeasible(_) => true,
            Error::Phase { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }

    /// True for input validation failures, including when wrapped in a phase error.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. } | Error::Parse(_) | Error::DimensionMismatch { .. } => true,
            Error::Phase { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
