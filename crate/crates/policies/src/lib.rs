//! Rate-allocation rules for a single preemptive machine in the fluid model.
//!
//! Every rule is a pure function from the *visible* state of the active jobs
//! to an [`Allocation`]. Visibility is enforced by [`JobState`]: a policy only
//! learns a job's size through [`JobState::remaining`] once the job is known
//! (or, for SRPT, because that policy is clairvoyant by definition).
//!
//! The rules:
//!
//! * **SLF** — run the job with the smallest lower bound on its remaining
//!   work. A known job's bound is its remaining time; an unknown job's bound
//!   is `ε/(1−ε)` times its elapsed time. Ties between the best known job and
//!   the best unknown jobs go to the known job; equal unknown bounds share the
//!   machine equally.
//! * **SRPT** — run the job with the shortest remaining time.
//! * **SETF** — share the machine equally among the least-processed jobs.
//! * **RR** — share the machine equally among all active jobs.
//!
//! All ties between jobs are broken towards the lower id.

use std::fmt;
use std::str::FromStr;

use eclair_core::{JobId, Rat};

/// Errors raised by allocation rules.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    /// SRPT needs every active size.
    #[error("job {0} has no declared size but the policy needs sizes")]
    Undeclared(JobId),
    /// The rule was invoked without active jobs.
    #[error("no active jobs")]
    NoActiveJobs,
    /// Unknown policy name.
    #[error("unknown policy `{0}` (expected slf, srpt, setf or rr)")]
    UnknownPolicy(String),
}

/// The state of one active job as seen by a policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobState {
    /// Job id.
    pub id: JobId,
    /// Work received so far, `e_j(t)`.
    pub elapsed: Rat,
    /// Size, or `None` while undeclared (treated as infinitely large).
    pub size: Option<Rat>,
    /// `true` once `r_j(t) ≤ ε·p_j`, i.e. `e_j(t) ≥ (1−ε)·p_j`.
    pub known: bool,
}

impl JobState {
    /// Builds a state and derives the `known` flag from ε.
    pub fn new(id: JobId, elapsed: Rat, size: Option<Rat>, epsilon: &Rat) -> JobState {
        let known = match &size {
            Some(p) => elapsed >= (Rat::one() - epsilon) * p,
            None => false,
        };
        JobState {
            id,
            elapsed,
            size,
            known,
        }
    }

    /// Remaining work `r_j(t) = p_j − e_j(t)`; `None` for undeclared jobs.
    pub fn remaining(&self) -> Option<Rat> {
        self.size.as_ref().map(|p| p - &self.elapsed)
    }
}

/// SLF's lower bound `η_j(t)` on the remaining work of a job.
///
/// For a known job this is the remaining time; for an unknown job it is
/// `ε/(1−ε)·e_j(t)`. Returns `None` for an unknown job when ε = 1 (which
/// cannot happen for a declared job, since every job is known on arrival).
///
/// ```
/// use eclair_core::Rat;
/// use eclair_policies::{estimate, JobState};
///
/// let eps = Rat::new(1, 2);
/// let unknown = JobState::new(1, Rat::new(1, 2), Some(Rat::int(5)), &eps);
/// assert_eq!(estimate(&unknown, &eps), Some(Rat::new(1, 2)));
/// let known = JobState::new(6, Rat::new(1, 2), Some(Rat::int(1)), &eps);
/// assert_eq!(estimate(&known, &eps), Some(Rat::new(1, 2)));
/// ```
pub fn estimate(state: &JobState, epsilon: &Rat) -> Option<Rat> {
    if state.known {
        state.remaining()
    } else if *epsilon < Rat::one() {
        Some(epsilon / (Rat::one() - epsilon) * &state.elapsed)
    } else {
        None
    }
}

/// Processing rates of the active jobs, sorted by job id, positive entries only.
///
/// Equal shares (the common case for SLF, SETF and RR pools) are stored once,
/// so an allocation over `n` jobs costs `n` ids plus a single rate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Allocation {
    ids: Vec<JobId>,
    rates: Rates,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Rates {
    Uniform(Rat),
    PerJob(Vec<Rat>),
}

impl Default for Rates {
    fn default() -> Rates {
        Rates::Uniform(Rat::zero())
    }
}

impl Allocation {
    /// The idle allocation.
    pub fn idle() -> Allocation {
        Allocation::default()
    }

    /// Builds an allocation; zero rates are dropped and entries sorted by id.
    pub fn from_rates(mut rates: Vec<(JobId, Rat)>) -> Allocation {
        rates.retain(|(_, r)| r.is_positive());
        if rates.is_empty() {
            return Allocation::idle();
        }
        rates.sort_by_key(|(id, _)| *id);
        let uniform = rates.windows(2).all(|w| w[0].1 == w[1].1);
        let ids = rates.iter().map(|(id, _)| *id).collect();
        let rates = if uniform {
            Rates::Uniform(rates.swap_remove(0).1)
        } else {
            Rates::PerJob(rates.into_iter().map(|(_, r)| r).collect())
        };
        Allocation { ids, rates }
    }

    /// All of `speed` to one job.
    pub fn single(id: JobId, speed: &Rat) -> Allocation {
        Allocation::shared(&[id], speed)
    }

    /// `speed` shared equally among `ids`.
    pub fn shared(ids: &[JobId], speed: &Rat) -> Allocation {
        if ids.is_empty() || !speed.is_positive() {
            return Allocation::idle();
        }
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let each = speed / Rat::from(ids.len());
        Allocation {
            ids,
            rates: Rates::Uniform(each),
        }
    }

    /// Rate of job `id` (zero if absent).
    pub fn rate(&self, id: JobId) -> Rat {
        match self.ids.binary_search(&id) {
            Ok(i) => self.rate_at(i).clone(),
            Err(_) => Rat::zero(),
        }
    }

    fn rate_at(&self, i: usize) -> &Rat {
        match &self.rates {
            Rates::Uniform(r) => r,
            Rates::PerJob(v) => &v[i],
        }
    }

    /// `(id, rate)` pairs with positive rate, ascending by id.
    pub fn iter(&self) -> impl Iterator<Item = (JobId, &Rat)> + '_ {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (*id, self.rate_at(i)))
    }

    /// Ids with positive rate, ascending.
    pub fn jobs(&self) -> Vec<JobId> {
        self.ids.clone()
    }

    /// Ids with positive rate, ascending, without copying.
    pub fn ids(&self) -> &[JobId] {
        &self.ids
    }

    /// `true` if job `id` receives a positive rate.
    pub fn contains(&self, id: JobId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// Number of jobs with positive rate.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    /// `true` if the machine idles.
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Sum of all rates.
    pub fn total(&self) -> Rat {
        match &self.rates {
            Rates::Uniform(r) => r * Rat::from(self.ids.len()),
            Rates::PerJob(v) => v.iter().sum(),
        }
    }

    /// `true` if no job is processed.
    pub fn is_idle(&self) -> bool {
        self.ids.is_empty()
    }

    /// Multiplies every rate by `factor`.
    pub fn scaled(&self, factor: &Rat) -> Allocation {
        Allocation::from_rates(self.iter().map(|(id, r)| (id, r * factor)).collect())
    }
}

fn argmin_by_remaining<'a>(states: impl Iterator<Item = &'a JobState>) -> Option<(JobId, Rat)> {
    let mut best: Option<(JobId, Rat)> = None;
    for s in states {
        let r = s.remaining().expect("declared");
        let better = match &best {
            None => true,
            Some((id, br)) => r < *br || (r == *br && s.id < *id),
        };
        if better {
            best = Some((s.id, r));
        }
    }
    best
}

fn min_elapsed_pool<'a>(states: impl Iterator<Item = &'a JobState> + Clone) -> (Rat, Vec<JobId>) {
    let min = states
        .clone()
        .map(|s| &s.elapsed)
        .min()
        .cloned()
        .unwrap_or_else(Rat::zero);
    let pool = states.filter(|s| s.elapsed == min).map(|s| s.id).collect();
    (min, pool)
}

/// SLF allocation.
///
/// If the smallest known estimate is at most the smallest unknown estimate,
/// the known job attaining it gets the whole machine; otherwise all unknown
/// jobs attaining the smallest unknown estimate share the machine equally.
/// Unknown jobs are compared by elapsed time, which orders their estimates
/// identically for every ε < 1 and makes ε = 0 coincide with SETF.
///
/// ```
/// use eclair_core::Rat;
/// use eclair_policies::{slf_allocation, JobState};
///
/// let eps = Rat::new(1, 2);
/// let states: Vec<JobState> = [5, 4, 3, 3, 2, 1]
///     .iter()
///     .enumerate()
///     .map(|(i, &p)| JobState::new(i as u64 + 1, Rat::zero(), Some(Rat::int(p)), &eps))
///     .collect();
/// let alloc = slf_allocation(&states, &eps, &Rat::one()).unwrap();
/// assert!(alloc.iter().all(|(_, r)| *r == Rat::new(1, 6)));
/// ```
pub fn slf_allocation(
    states: &[JobState],
    epsilon: &Rat,
    speed: &Rat,
) -> Result<Allocation, PolicyError> {
    if states.is_empty() {
        return Err(PolicyError::NoActiveJobs);
    }
    let best_known = argmin_by_remaining(states.iter().filter(|s| s.known));
    let unknown = states.iter().filter(|s| !s.known);
    if unknown.clone().next().is_none() {
        let (id, _) = best_known.expect("some job is active");
        return Ok(Allocation::single(id, speed));
    }
    let (min_elapsed, pool) = min_elapsed_pool(unknown);
    if let Some((id, r)) = best_known {
        // At ε = 1 an unknown (necessarily undeclared) job has no finite bound.
        if *epsilon >= Rat::one() || r <= epsilon / (Rat::one() - epsilon) * &min_elapsed {
            return Ok(Allocation::single(id, speed));
        }
    }
    Ok(Allocation::shared(&pool, speed))
}

/// SRPT allocation: the whole machine to the job with least remaining work.
///
/// ```
/// use eclair_core::Rat;
/// use eclair_policies::{srpt_allocation, JobState};
///
/// let eps = Rat::one();
/// let states = vec![
///     JobState::new(1, Rat::zero(), Some(Rat::int(2)), &eps),
///     JobState::new(2, Rat::zero(), Some(Rat::int(2)), &eps),
/// ];
/// assert_eq!(srpt_allocation(&states, &Rat::one()).unwrap().jobs(), vec![1]);
/// ```
pub fn srpt_allocation(states: &[JobState], speed: &Rat) -> Result<Allocation, PolicyError> {
    if let Some(s) = states.iter().find(|s| s.size.is_none()) {
        return Err(PolicyError::Undeclared(s.id));
    }
    let (id, _) = argmin_by_remaining(states.iter()).ok_or(PolicyError::NoActiveJobs)?;
    Ok(Allocation::single(id, speed))
}

/// SETF allocation: equal shares among the jobs with least elapsed time.
///
/// ```
/// use eclair_core::Rat;
/// use eclair_policies::{setf_allocation, JobState};
///
/// let eps = Rat::zero();
/// let states: Vec<JobState> = [0, 0, 1]
///     .iter()
///     .enumerate()
///     .map(|(i, &e)| JobState::new(i as u64 + 1, Rat::int(e), Some(Rat::int(5)), &eps))
///     .collect();
/// let alloc = setf_allocation(&states, &Rat::one());
/// assert_eq!(alloc.rate(1), Rat::new(1, 2));
/// assert_eq!(alloc.rate(3), Rat::zero());
/// ```
pub fn setf_allocation(states: &[JobState], speed: &Rat) -> Allocation {
    if states.is_empty() {
        return Allocation::idle();
    }
    let (_, pool) = min_elapsed_pool(states.iter());
    Allocation::shared(&pool, speed)
}

/// Round-Robin (processor sharing): equal shares among all active jobs.
pub fn rr_allocation(states: &[JobState], speed: &Rat) -> Allocation {
    let ids: Vec<JobId> = states.iter().map(|s| s.id).collect();
    Allocation::shared(&ids, speed)
}

/// The allocation rules available to the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Shortest Lower-bound First.
    Slf,
    /// Shortest Remaining Processing Time.
    Srpt,
    /// Shortest Elapsed Time First.
    Setf,
    /// Round-Robin.
    Rr,
}

impl Policy {
    /// `true` if the rule reads sizes of unknown jobs.
    pub fn needs_sizes(self) -> bool {
        matches!(self, Policy::Srpt)
    }

    /// Applies the rule to the active jobs. An empty state yields the idle
    /// allocation for every rule.
    pub fn allocate(
        self,
        states: &[JobState],
        epsilon: &Rat,
        speed: &Rat,
    ) -> Result<Allocation, PolicyError> {
        if states.is_empty() {
            return Ok(Allocation::idle());
        }
        match self {
            Policy::Slf => slf_allocation(states, epsilon, speed),
            Policy::Srpt => srpt_allocation(states, speed),
            Policy::Setf => Ok(setf_allocation(states, speed)),
            Policy::Rr => Ok(rr_allocation(states, speed)),
        }
    }

    /// Time until the rule would change its choice while `alloc` is applied,
    /// assuming no arrival, knowledge or completion happens first.
    ///
    /// Such *crossings* are: for SLF, the shared unknown estimate reaching the
    /// next unknown tier (the pool grows) or the smallest known remaining time
    /// (switch to the known job); for SETF, the pool's elapsed time reaching
    /// the next level. SRPT and RR never change their choice on their own.
    pub fn crossing_horizon(
        self,
        states: &[JobState],
        alloc: &Allocation,
        epsilon: &Rat,
    ) -> Option<Rat> {
        match self {
            Policy::Srpt | Policy::Rr => None,
            Policy::Setf => pool_horizon(states.iter(), alloc),
            Policy::Slf => {
                let (first, rate) = alloc.iter().next()?;
                let running = states.iter().find(|s| s.id == first)?;
                if running.known {
                    return None;
                }
                let rate = rate.clone();
                let mut best = pool_horizon(states.iter().filter(|s| !s.known), alloc);
                if epsilon.is_positive() {
                    let factor = (Rat::one() - epsilon) / epsilon;
                    for s in states.iter().filter(|s| s.known) {
                        let r = s.remaining().expect("known jobs are declared");
                        let dt = (r * &factor - &running.elapsed) / &rate;
                        if dt.is_positive() && best.as_ref().is_none_or(|b| dt < *b) {
                            best = Some(dt);
                        }
                    }
                }
                best
            }
        }
    }
}

/// Time until the equally-shared pool reaches the next elapsed level among `states`.
fn pool_horizon<'a>(states: impl Iterator<Item = &'a JobState>, alloc: &Allocation) -> Option<Rat> {
    let (first, rate) = alloc.iter().next()?;
    let mut level: Option<Rat> = None;
    let mut next: Option<Rat> = None;
    let states: Vec<&JobState> = states.collect();
    for s in &states {
        if s.id == first {
            level = Some(s.elapsed.clone());
        }
    }
    let level = level?;
    for s in &states {
        if s.elapsed > level && next.as_ref().is_none_or(|n| s.elapsed < *n) {
            next = Some(s.elapsed.clone());
        }
    }
    next.map(|n| (n - level) / rate)
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Slf => "slf",
            Policy::Srpt => "srpt",
            Policy::Setf => "setf",
            Policy::Rr => "rr",
        })
    }
}

impl FromStr for Policy {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Policy, PolicyError> {
        match s.to_ascii_lowercase().as_str() {
            "slf" => Ok(Policy::Slf),
            "srpt" => Ok(Policy::Srpt),
            "setf" => Ok(Policy::Setf),
            "rr" => Ok(Policy::Rr),
            other => Err(PolicyError::UnknownPolicy(other.to_string())),
        }
    }
}
