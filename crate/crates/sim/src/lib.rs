//! Exact event-driven fluid simulation of a single preemptive machine.
//!
//! A schedule is a list of segments with constant rates. Events (arrivals,
//! jobs becoming known, completions, policy crossings and forbidden-interval
//! boundaries) are found in closed form, so every time, elapsed time and
//! completion time is an exact rational.

mod engine;
mod interval;
mod schedule;

pub use eclair_policies::{Allocation, JobState, Policy, PolicyError};
pub use engine::{simulate, simulate_from, simulate_until, Simulator, Step};
pub use interval::IntervalSet;
pub use schedule::{Event, EventKind, JobInfo, Schedule, Segment};

use eclair_core::{JobId, Rat};

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    /// The speed must be positive.
    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(Rat),
    /// An interval with `a > b`.
    #[error("interval [{0}, {1}) is reversed")]
    BadInterval(Box<Rat>, Box<Rat>),
    /// A job id was added twice.
    #[error("job {0} added twice")]
    DuplicateJob(JobId),
    /// A job was added with a release before the current time.
    #[error("job {0} released before the current simulation time")]
    ReleaseInPast(JobId),
    /// Initial elapsed time is negative or exceeds the size.
    #[error("job {0} has an invalid initial elapsed time")]
    BadInitial(JobId),
    /// A declared size is zero or negative.
    #[error("job {0} has a non-positive size")]
    NonPositiveSize(JobId),
    /// The id is not part of the simulation.
    #[error("job {0} is not part of the simulation")]
    UnknownJob(JobId),
    /// The size was already fixed.
    #[error("job {0} is already declared")]
    AlreadyDeclared(JobId),
    /// The declared size is below the work already done.
    #[error("declared size of job {0} is below its elapsed time")]
    BadDeclaration(JobId),
    /// A size is needed but the job is undeclared.
    #[error("job {0} has no declared size")]
    Undeclared(JobId),
    /// Only undeclared jobs run and no stopping time was given.
    #[error("simulation has no next event (only undeclared jobs run)")]
    Unbounded,
    /// The policy rejected the state.
    #[error(transparent)]
    Policy(PolicyError),
}
