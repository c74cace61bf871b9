//! The speed-augmentation bridge between SLF and SETF.
//!
//! * [`water_filling_trajectories`] and [`water_filling_dominance`] evolve two
//!   sets of jars filled least-loaded first and check that the set that
//!   starts higher stays higher, jar by jar.
//! * [`setfi_vs_setf`] compares SETF with SETFI, the same policy forced to
//!   idle during a set of intervals: SETFI never gets ahead of SETF on any
//!   job and never holds fewer jobs.
//! * [`reduction_check`] runs the four schedules of the comparison between
//!   SLF and SETF with `1 + δ` speed, `δ = ε/(1−ε)`, and checks every link
//!   of the chain `|SETF_{J,1+δ}(t)| = |SETF_{J′}(t)| ≤ |SETFI_{J′,I}(t)| ≤
//!   |SLF_J(t)|` at every event time, where `J′` shrinks every size by
//!   `1−ε` and `I` is the time SLF spends on known jobs.
//! * [`speed_corollary_check`] checks the consequence that SETF with speed
//!   `1 + ε` never holds more than `1 + ⌈1/ε⌉` times as many jobs as SRPT.
//!
//! Every comparison is exact; a failed link is reported with the first time
//! at which it fails.

mod chain;
mod trace;
mod water;

pub use chain::{
    reduction_check, setfi_vs_setf, speed_corollary_check, ChainRow, CorollaryReport, Link,
    ReductionReport, SetfiReport,
};
pub use water::{
    water_filling_dominance, water_filling_trajectories, DominanceReport, DominanceWitness,
    WaterFillingConfig, WaterFillingTrajectories,
};

/// Errors raised by the reduction checks.
#[derive(Debug, thiserror::Error)]
pub enum ReductionError {
    /// A configuration violates `0 ≤ x ≤ x′ ≤ p`. This is a malformed input,
    /// not a counterexample to the dominance property.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Parameters outside the supported range.
    #[error("invalid input: {0}")]
    Input(String),
    /// The simulator rejected an operation.
    #[error(transparent)]
    Sim(#[from] eclair_sim::SimError),
    /// An instance could not be built.
    #[error(transparent)]
    Instance(#[from] eclair_core::Error),
}
