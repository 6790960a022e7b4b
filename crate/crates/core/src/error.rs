use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("not a unit: valuation {0}")]
    NotAUnit(i64),
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("malformed exponent pair: {0}")]
    MalformedPair(String),
    #[error("all weights are zero")]
    AllWeightsZero,
    #[error("filtered module is not weakly admissible")]
    NotAdmissible,
    #[error("malformed ell vector: {0}")]
    MalformedEll(String),
    #[error("ordinary configuration excluded: {0}")]
    OrdinaryExcluded(String),
    #[error("type vector {0} lies in C1 or C2")]
    ClassViolation(String),
    #[error("evaluation point violates the p^m bound: {0}")]
    BoundViolation(String),
    #[error("parity violation: {0}")]
    ParityViolation(String),
    #[error("z polynomial not integral: {0}")]
    IntegralityFailed(String),
    #[error("z polynomial property failed: {0}")]
    PropertyFailed(String),
    #[error("operator not surjective: {0}")]
    NotSurjective(String),
    #[error("residual order stalled at {0}")]
    StalledResidual(usize),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case tag for machine consumers.
    pub fn code(&self) -> &'static str {
        match self {
            Error::PrecisionLoss(_) => "precision_loss",
            Error::NotAUnit(_) => "not_a_unit",
            Error::LevelMismatch(..) => "level_mismatch",
            Error::VerificationFailed(_) => "verification_failed",
            Error::MalformedPair(_) => "malformed_pair",
            Error::AllWeightsZero => "all_weights_zero",
            Error::NotAdmissible => "not_admissible",
            Error::MalformedEll(_) => "malformed_ell",
            Error::OrdinaryExcluded(_) => "ordinary_excluded",
            Error::ClassViolation(_) => "class_violation",
            Error::BoundViolation(_) => "bound_violation",
            Error::ParityViolation(_) => "parity_violation",
            Error::IntegralityFailed(_) => "integrality_failed",
            Error::PropertyFailed(_) => "property_failed",
            Error::NotSurjective(_) => "not_surjective",
            Error::StalledResidual(_) => "stalled_residual",
            Error::Overflow(_) => "overflow",
            Error::Invalid(_) => "invalid",
            Error::Parse(_) => "parse",
        }
    }

    /// Failures of a computation on valid input, as opposed to bad input.
    pub fn is_verification(&self) -> bool {
        matches!(
            self,
            Error::PrecisionLoss(_)
                | Error::VerificationFailed(_)
                | Error::ParityViolation(_)
                | Error::IntegralityFailed(_)
                | Error::PropertyFailed(_)
                | Error::NotSurjective(_)
                | Error::StalledResidual(_)
        )
    }
}
