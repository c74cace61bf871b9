//! Exact scalar arithmetic and the job/instance data model shared by every
//! other crate of the workspace.
//!
//! All continuous quantities (times, sizes, elapsed and remaining work, rates,
//! assignment weights) are [`Rat`] values, so every equality the analysis
//! relies on can be checked exactly.

mod instance;
mod rat;

pub use instance::{
    busy_periods, parse_instance, scale_instance, BusyPeriod, Instance, Job, JobId, ReleaseTag,
};
pub use rat::{ceil_inv, gcd, Rat};

/// Errors raised while building, parsing or transforming instances.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A rational literal does not follow the accepted grammar.
    #[error("invalid rational literal `{0}`")]
    InvalidRational(String),
    /// The JSON document is malformed or has the wrong shape.
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
    /// Two jobs share an id.
    #[error("duplicate job id {0}")]
    DuplicateId(JobId),
    /// Job ids must be positive.
    #[error("job ids must be positive")]
    ZeroId,
    /// A release time is negative.
    #[error("job {0} has a negative release time")]
    NegativeRelease(JobId),
    /// A declared size is zero or negative.
    #[error("job {0} has a non-positive size")]
    NonPositiveSize(JobId),
    /// ε lies outside `[0, 1]`.
    #[error("epsilon {0} lies outside [0, 1]")]
    EpsilonRange(Rat),
    /// A scale factor is zero or negative.
    #[error("scale factor must be positive, got {0}")]
    NonPositiveFactor(Rat),
    /// An operation that needs sizes met an undeclared job.
    #[error("job {0} has no declared size")]
    Undeclared(JobId),
}
