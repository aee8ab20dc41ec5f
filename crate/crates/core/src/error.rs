use thiserror::Error;

use crate::model::BasisTag;

/// Errors produced by the refrigerator model and its analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("basis mismatch: expected {expected:?}, got {actual:?}")]
    BasisMismatch { expected: BasisTag, actual: BasisTag },

    #[error("block reduction requires uniform rates across all baths")]
    NonUniformRates,

    #[error("block reduction requires exactly one of g_c, g_w to vanish")]
    BothCouplingsNonzero,

    #[error("leading cubic coefficient is zero")]
    DegenerateCubic,

    #[error("gamma_plus at the third-order point would be {0}, which is not positive")]
    GammaPlusNonpositive(f64),

    #[error("spectrum is degenerate (minimum eigenvalue gap {gap:.3e})")]
    DegenerateSpectrum { gap: f64 },

    #[error("{lambda} is not an eigenvalue (smallest singular value {sigma_min:.3e})")]
    NotAnEigenvalue { lambda: String, sigma_min: f64 },

    #[error("parameters are not at a third-order exceptional point")]
    NotAtLep3,

    #[error("Jordan chain residual {0:.3e} exceeds tolerance")]
    ChainResidualTooLarge(f64),

    #[error("denominator {0:.3e} is too close to zero")]
    DenominatorNearZero(f64),

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("horizon {t_end} is shorter than the required {required}")]
    InsufficientHorizon { t_end: f64, required: f64 },

    #[error("no parameter point satisfies the performance constraints")]
    EmptyFeasibleSet,

    #[error("singular linear system")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
