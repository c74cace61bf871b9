//! Competitiveness certificates for SLF.
//!
//! For an instance `J` and a target time `t`, a certificate consists of an
//! instance `J′` obtained from `J` by moving some release times earlier
//! ("early-arriving") such that SLF is in exactly the same state at `t` on
//! both ("t-equivalent"), together with a fractional assignment between the
//! remaining work of SLF and of SRPT on `J′` at `t` whose prefix expansion is
//! at most `⌈1/ε⌉`. Such a certificate implies `|SLF_J(t)| ≤ ⌈1/ε⌉·|OPT_J(t)|`.
//!
//! [`create_valid_assignment`] builds certificates by induction over time and
//! asserts every intermediate claim of the construction on the concrete
//! instance; a failing claim is reported as a [`CounterexampleReport`] rather
//! than silently ignored. [`verify_certificate`] re-checks a certificate from
//! scratch without trusting the construction.

mod create;
mod moves;
mod split;
mod state;
mod update;
mod verify;

use eclair_core::Rat;
use serde::Serialize;

pub use create::{create_valid_assignment, Case, Certificate, IterationRecord};
pub use moves::{check_t_equivalence, is_early_arriving, move_jobs, move_jobs_open};
pub use split::{compute_work_split, WorkSplit};
pub use update::{update_valid_assignment, Branch, UpdateOutcome};
pub use verify::{verify_certificate, CheckResult, VerificationReport};

/// A claim of the construction that failed on a concrete instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterexampleReport {
    /// Stable name of the failed check, e.g. `inv1` or `update.property3`.
    pub check: String,
    /// Human-readable description of the violation.
    pub detail: String,
    /// The loop time at which the check failed, if inside the loop.
    pub s: Option<Rat>,
    /// Iterations completed before the failure.
    pub transcript: Vec<IterationRecord>,
}

/// Errors raised by the certifier.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertifierError {
    /// The input violates a precondition (ε range, undeclared sizes, ...).
    #[error("invalid input: {0}")]
    Input(String),
    /// A claim of the construction failed.
    #[error("check `{}` failed: {}", .0.check, .0.detail)]
    Counterexample(Box<CounterexampleReport>),
}

impl CertifierError {
    pub(crate) fn claim(check: &str, detail: impl Into<String>) -> CertifierError {
        CertifierError::Counterexample(Box::new(CounterexampleReport {
            check: check.to_string(),
            detail: detail.into(),
            s: None,
            transcript: Vec::new(),
        }))
    }

    /// The counterexample, if this is a failed claim.
    pub fn counterexample(&self) -> Option<&CounterexampleReport> {
        match self {
            CertifierError::Counterexample(c) => Some(c),
            CertifierError::Input(_) => None,
        }
    }

    pub(crate) fn at(self, s: &Rat, transcript: &[IterationRecord]) -> CertifierError {
        match self {
            CertifierError::Counterexample(mut c) => {
                c.s.get_or_insert_with(|| s.clone());
                if c.transcript.is_empty() {
                    c.transcript = transcript.to_vec();
                }
                CertifierError::Counterexample(c)
            }
            other => other,
        }
    }
}
