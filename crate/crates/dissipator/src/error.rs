//! Error type shared by all solver and model operations.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix input violates a structural precondition (dimensions, finiteness).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A linear system is singular to working precision.
    #[error("singular system (condition estimate {condition:.3e}): {context}")]
    SingularSystem { context: String, condition: f64 },

    /// A matrix expected to have full column rank is rank deficient.
    #[error("rank deficient: {0}")]
    RankDeficient(String),

    /// The pair (A, B) cannot be made dissipative.
    #[error("pair is not dissipatable: {0}")]
    NotDissipatable(String),

    /// The spectral-gap condition of the block parametrization fails.
    #[error(
        "alpha condition violated: alpha = {alpha:.6e} but \
         lambda_min_pos = {lambda_min_pos:.6e} <= alpha * |lambda_max_neg| \
         with |lambda_max_neg| = {lambda_max_neg_abs:.6e}"
    )]
    AlphaConditionViolated {
        alpha: f64,
        lambda_min_pos: f64,
        lambda_max_neg_abs: f64,
    },

    /// An operation was invoked on data that fails its documented precondition.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// The system is already (weakly) dissipative; nothing to shrink.
    #[error("already dissipative: {0}")]
    AlreadyDissipative(String),

    /// The field-of-values boundary has no flat segment at the imaginary axis.
    #[error("no flat segment: {0}")]
    NoFlatSegment(String),

    /// The symmetric part has no positive eigenvalues to build B from.
    #[error("no positive eigenvalues: {0}")]
    NoPositivePart(String),

    /// A seeded generator exhausted its retry budget.
    #[error("generation failed: {0}")]
    GenerationFailed(String),

    /// The inner gradient flow cannot make progress at any admissible step size.
    #[error("stagnated step: step size collapsed below {0:.3e}")]
    StagnatedStep(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
