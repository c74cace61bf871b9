//! Lower-bound constructions for ε-clairvoyant flow time scheduling.
//!
//! * [`deterministic_lb_run`] plays the adaptive round adversary against a
//!   live policy: it releases batches of undeclared jobs, watches elapsed
//!   times through the simulator and fixes sizes only once the policy has
//!   committed, then extends the instance with a tail of unit jobs.
//! * [`SamplerParams`] draws the randomized families (geometric sizes at
//!   time zero, the two-job phase construction and exponential sizes) from a
//!   seed, and [`lb_statistics`] runs a policy on many draws.
//!
//! Everything is exact: the only floating-point step is the inverse-CDF draw
//! of the exponential family, which is quantized to a dyadic rational before
//! it reaches the simulator.

mod deterministic;
mod samplers;
mod stats;

pub use deterministic::{append_unit_tail, deterministic_lb_run, AdversaryTranscript, RoundRecord};
pub use samplers::{
    exp_simultaneous_sample, geometric_tau, phase_lb_sample, randomized_lb_sample, Draw,
    SamplerKind, SamplerParams, EXP_FRACTION_BITS,
};
pub use stats::{lb_statistics, Estimate, LbSummary, SampleRow};

use eclair_core::Rat;

/// Errors raised by the constructions.
#[derive(Debug, thiserror::Error)]
pub enum AdversaryError {
    /// Parameters outside the supported range.
    #[error("invalid input: {0}")]
    Input(String),
    /// One of the construction's inequalities failed; since the inequalities
    /// hold against every policy this points at a simulator bug.
    #[error("round {round}: claim `{claim}` failed ({lhs} vs {rhs})")]
    Claim {
        /// Round index, starting at 1.
        round: usize,
        /// Claim name.
        claim: String,
        /// Left-hand side.
        lhs: Box<Rat>,
        /// Right-hand side.
        rhs: Box<Rat>,
    },
    /// The simulator rejected an operation.
    #[error(transparent)]
    Sim(#[from] eclair_sim::SimError),
    /// An instance could not be built.
    #[error(transparent)]
    Instance(#[from] eclair_core::Error),
    /// A flow time could not be computed.
    #[error(transparent)]
    Metrics(#[from] eclair_metrics::MetricsError),
}
