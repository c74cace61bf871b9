//! The event-driven engine.
//!
//! Between two events every rate is constant, so each event predicate
//! (arrival, knowledge, completion, policy crossing, forbidden boundary,
//! caller watch) is linear in time and its first occurrence is found by one
//! exact division. The engine advances to the earliest one, updates elapsed
//! times, and re-asks the policy.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use eclair_core::{Instance, Job, JobId, Rat, ReleaseTag};
use eclair_policies::{Allocation, JobState, Policy};

use crate::schedule::{Event, EventKind, JobInfo, Schedule, Segment};
use crate::{IntervalSet, SimError};

#[derive(Clone, Debug)]
struct Live {
    release: ReleaseTag,
    size: Option<Rat>,
    /// `(1−ε)·p`, the elapsed time at which the job becomes known.
    known_at: Option<Rat>,
    initial: Rat,
    elapsed: Rat,
    known: bool,
    done: bool,
}

/// Why [`Simulator::step`] stopped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Time advanced to the next event.
    Advanced,
    /// The caller's time limit was reached.
    Limit,
    /// A watch fired; the payload lists the jobs whose watch level was reached.
    Watch(Vec<JobId>),
    /// Nothing is active or pending.
    Exhausted,
}

/// A resumable simulation that callers can extend while it runs.
///
/// Jobs may be added (with release at or after the current time) and sizes
/// declared while the simulation is in progress, which is how adaptive
/// adversaries interact with a policy without inspecting it.
///
/// ```
/// use eclair_core::{Job, Rat};
/// use eclair_policies::Policy;
/// use eclair_sim::Simulator;
///
/// let mut sim = Simulator::new(Rat::new(1, 2), Policy::Slf, Rat::one());
/// sim.add_job(Job::undeclared(1, Rat::zero())).unwrap();
/// sim.add_job(Job::undeclared(2, Rat::zero())).unwrap();
/// sim.run_until(&Rat::int(2)).unwrap();
/// assert_eq!(sim.elapsed(1), Some(Rat::one()));
/// sim.declare(1, Rat::int(2)).unwrap();
/// sim.declare(2, Rat::int(2)).unwrap();
/// let schedule = sim.finish().unwrap();
/// assert_eq!(schedule.completion(1), Some(&Rat::int(3)));
/// assert_eq!(schedule.completion(2), Some(&Rat::int(4)));
/// ```
#[derive(Clone, Debug)]
pub struct Simulator {
    epsilon: Rat,
    one_minus_eps: Rat,
    policy: Policy,
    speed: Rat,
    forbidden: IntervalSet,
    now: Rat,
    jobs: BTreeMap<JobId, Live>,
    /// Released jobs that have not completed.
    active: BTreeSet<JobId>,
    pending: VecDeque<(ReleaseTag, JobId)>,
    segments: Vec<Segment>,
    completions: BTreeMap<JobId, Rat>,
    events: Vec<Event>,
}

impl Simulator {
    /// A simulator at time 0 with no jobs.
    pub fn new(epsilon: Rat, policy: Policy, speed: Rat) -> Simulator {
        Simulator {
            one_minus_eps: Rat::one() - &epsilon,
            epsilon,
            policy,
            speed,
            forbidden: IntervalSet::empty(),
            now: Rat::zero(),
            jobs: BTreeMap::new(),
            active: BTreeSet::new(),
            pending: VecDeque::new(),
            segments: Vec::new(),
            completions: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    /// Forces the machine to idle during `forbidden`.
    pub fn with_forbidden(mut self, forbidden: IntervalSet) -> Simulator {
        self.forbidden = forbidden;
        self
    }

    /// Current time.
    pub fn now(&self) -> &Rat {
        &self.now
    }

    /// Adds a job released at or after the current time.
    pub fn add_job(&mut self, job: Job) -> Result<(), SimError> {
        self.add_job_with_elapsed(job, Rat::zero())
    }

    /// Adds a job that has already received `initial` units of work when
    /// released (used for water-filling configurations).
    pub fn add_job_with_elapsed(&mut self, job: Job, initial: Rat) -> Result<(), SimError> {
        if self.jobs.contains_key(&job.id) {
            return Err(SimError::DuplicateJob(job.id));
        }
        if job.release.time < self.now {
            return Err(SimError::ReleaseInPast(job.id));
        }
        if initial.is_negative() || job.size.as_ref().is_some_and(|p| initial > *p) {
            return Err(SimError::BadInitial(job.id));
        }
        if job.size.as_ref().is_some_and(|p| !p.is_positive()) {
            return Err(SimError::NonPositiveSize(job.id));
        }
        let known_at = job.size.as_ref().map(|p| &self.one_minus_eps * p);
        let pos = self
            .pending
            .partition_point(|(tag, id)| (tag, *id) < (&job.release, job.id));
        self.pending.insert(pos, (job.release.clone(), job.id));
        self.jobs.insert(
            job.id,
            Live {
                release: job.release,
                size: job.size,
                known_at,
                elapsed: initial.clone(),
                initial,
                known: false,
                done: false,
            },
        );
        Ok(())
    }

    /// Fixes the size of a job that was added undeclared. The size must be at
    /// least the job's current elapsed time; if equal, the job completes now.
    pub fn declare(&mut self, id: JobId, size: Rat) -> Result<(), SimError> {
        let job = self.jobs.get_mut(&id).ok_or(SimError::UnknownJob(id))?;
        if job.size.is_some() {
            return Err(SimError::AlreadyDeclared(id));
        }
        if !size.is_positive() || size < job.elapsed {
            return Err(SimError::BadDeclaration(id));
        }
        job.known_at = Some(&self.one_minus_eps * &size);
        job.size = Some(size);
        self.settle();
        Ok(())
    }

    /// Elapsed time of `id`, if the job exists.
    pub fn elapsed(&self, id: JobId) -> Option<Rat> {
        self.jobs.get(&id).map(|j| j.elapsed.clone())
    }

    /// `true` if `id` has completed.
    pub fn is_complete(&self, id: JobId) -> bool {
        self.jobs.get(&id).is_some_and(|j| j.done)
    }

    /// States of the currently active jobs, ascending by id.
    pub fn states(&self) -> Vec<JobState> {
        self.active
            .iter()
            .map(|id| (id, &self.jobs[id]))
            .map(|(id, j)| JobState {
                id: *id,
                elapsed: j.elapsed.clone(),
                size: j.size.clone(),
                known: j.known,
            })
            .collect()
    }

    /// Releases due jobs and records knowledge and completion at `now`.
    fn settle(&mut self) {
        while let Some((tag, id)) = self.pending.front() {
            if tag.time > self.now {
                break;
            }
            let id = *id;
            self.pending.pop_front();
            self.active.insert(id);
            self.events.push(Event {
                t: self.now.clone(),
                kind: EventKind::Arrival,
                job: Some(id),
            });
        }
        let mut finished = Vec::new();
        for id in &self.active {
            let job = self.jobs.get_mut(id).expect("active job exists");
            let (Some(p), Some(known_at)) = (&job.size, &job.known_at) else {
                continue;
            };
            if !job.known && job.elapsed >= *known_at {
                job.known = true;
                // With ε = 0 knowledge coincides with completion.
                if job.elapsed < *p || self.epsilon.is_positive() {
                    self.events.push(Event {
                        t: self.now.clone(),
                        kind: EventKind::Known,
                        job: Some(*id),
                    });
                }
            }
            if job.elapsed >= *p {
                job.done = true;
                finished.push(*id);
                self.completions.insert(*id, self.now.clone());
                self.events.push(Event {
                    t: self.now.clone(),
                    kind: EventKind::Completion,
                    job: Some(*id),
                });
            }
        }
        for id in finished {
            self.active.remove(&id);
        }
    }

    fn push_segment(&mut self, end: Rat, alloc: Allocation) {
        if let Some(last) = self.segments.last_mut() {
            if last.end == self.now && last.alloc == alloc {
                last.end = end;
                return;
            }
        }
        self.segments.push(Segment {
            start: self.now.clone(),
            end,
            alloc,
        });
    }

    /// Advances to the next event, stopping early at `limit` or when a job in
    /// `watches` reaches its elapsed level.
    pub fn step(
        &mut self,
        limit: Option<&Rat>,
        watches: &[(JobId, Rat)],
    ) -> Result<Step, SimError> {
        self.settle();
        let fired: Vec<JobId> = watches
            .iter()
            .filter(|(id, level)| self.jobs.get(id).is_some_and(|j| j.elapsed >= *level))
            .map(|(id, _)| *id)
            .collect();
        if !fired.is_empty() {
            return Ok(Step::Watch(fired));
        }
        if limit.is_some_and(|l| *l <= self.now) {
            return Ok(Step::Limit);
        }
        let states = self.states();
        let next_arrival = self.pending.front().map(|(tag, _)| tag.time.clone());
        if states.is_empty() && next_arrival.is_none() {
            return Ok(Step::Exhausted);
        }

        let mut candidates: Vec<(Rat, Option<EventKind>)> = Vec::new();
        if let Some(a) = &next_arrival {
            candidates.push((a - &self.now, None));
        }
        if let Some(l) = limit {
            candidates.push((l - &self.now, None));
        }

        let alloc = if let Some((_, end)) = self.forbidden.covering(&self.now) {
            candidates.push((end - &self.now, Some(EventKind::ForbiddenEnd)));
            Allocation::idle()
        } else {
            if let Some(start) = self.forbidden.next_start_after(&self.now) {
                candidates.push((start - &self.now, Some(EventKind::ForbiddenStart)));
            }
            if states.is_empty() {
                Allocation::idle()
            } else {
                let alloc = self
                    .policy
                    .allocate(&states, &self.epsilon, &self.speed)
                    .map_err(SimError::Policy)?;
                for (id, rate) in alloc.iter() {
                    let job = &self.jobs[&id];
                    if let (Some(p), Some(known_at)) = (&job.size, &job.known_at) {
                        if !job.known && known_at < p {
                            candidates.push(((known_at - &job.elapsed) / rate, None));
                        }
                        candidates.push(((p - &job.elapsed) / rate, None));
                    }
                }
                if let Some(dt) = self.policy.crossing_horizon(&states, &alloc, &self.epsilon) {
                    candidates.push((dt, Some(EventKind::Crossing)));
                }
                for (id, level) in watches {
                    let rate = alloc.rate(*id);
                    if rate.is_positive() {
                        candidates.push(((level - &self.jobs[id].elapsed) / rate, None));
                    }
                }
                alloc
            }
        };

        let (dt, kind) = candidates
            .into_iter()
            .min_by(|a, b| a.0.cmp(&b.0))
            .ok_or(SimError::Unbounded)?;
        debug_assert!(dt.is_positive(), "events are strictly in the future");
        let end = &self.now + &dt;
        for (id, rate) in alloc.iter() {
            self.jobs
                .get_mut(&id)
                .expect("allocated job exists")
                .elapsed += rate * &dt;
        }
        self.push_segment(end.clone(), alloc);
        self.now = end;
        if let Some(kind) = kind {
            self.events.push(Event {
                t: self.now.clone(),
                kind,
                job: None,
            });
        }
        self.settle();
        Ok(Step::Advanced)
    }

    /// Runs until time `t` (inclusive of all events at `t`).
    pub fn run_until(&mut self, t: &Rat) -> Result<(), SimError> {
        while let Step::Advanced = self.step(Some(t), &[])? {}
        if self.now < *t {
            // Nothing left to do: the machine idles up to t.
            self.push_segment(t.clone(), Allocation::idle());
            self.now = t.clone();
            self.settle();
        }
        Ok(())
    }

    /// Runs until one of the `watches` fires (returning the jobs that reached
    /// their level), `limit` is reached, or nothing is left.
    pub fn run_until_watch(
        &mut self,
        watches: &[(JobId, Rat)],
        limit: Option<&Rat>,
    ) -> Result<Option<Vec<JobId>>, SimError> {
        loop {
            match self.step(limit, watches)? {
                Step::Advanced => {}
                Step::Watch(ids) => {
                    for id in &ids {
                        self.events.push(Event {
                            t: self.now.clone(),
                            kind: EventKind::Watch,
                            job: Some(*id),
                        });
                    }
                    return Ok(Some(ids));
                }
                Step::Limit | Step::Exhausted => return Ok(None),
            }
        }
    }

    /// Runs until every job completes.
    pub fn run_to_completion(&mut self) -> Result<(), SimError> {
        if let Some((id, _)) = self.jobs.iter().find(|(_, j)| j.size.is_none()) {
            return Err(SimError::Undeclared(*id));
        }
        while self.step(None, &[])? != Step::Exhausted {}
        Ok(())
    }

    /// Runs to completion and returns the schedule.
    pub fn finish(mut self) -> Result<Schedule, SimError> {
        self.run_to_completion()?;
        Ok(self.into_schedule())
    }

    /// Stops here and returns the schedule simulated so far.
    pub fn into_schedule(self) -> Schedule {
        let final_elapsed = self
            .jobs
            .iter()
            .map(|(id, j)| (*id, j.elapsed.clone()))
            .collect();
        Schedule {
            epsilon: self.epsilon,
            speed: self.speed,
            jobs: self
                .jobs
                .into_iter()
                .map(|(id, j)| {
                    (
                        id,
                        JobInfo {
                            release: j.release,
                            size: j.size,
                            initial: j.initial,
                        },
                    )
                })
                .collect(),
            segments: self.segments,
            completions: self.completions,
            events: self.events,
            horizon: self.now,
            final_elapsed,
        }
    }
}

fn load(inst: &Instance, policy: Policy, speed: &Rat) -> Result<Simulator, SimError> {
    if !speed.is_positive() {
        return Err(SimError::NonPositiveSpeed(speed.clone()));
    }
    let mut sim = Simulator::new(inst.epsilon.clone(), policy, speed.clone());
    for job in &inst.jobs {
        if policy.needs_sizes() && job.size.is_none() {
            return Err(SimError::Undeclared(job.id));
        }
        sim.add_job(job.clone())?;
    }
    Ok(sim)
}

/// Simulates `policy` on `inst` at the given speed until every job completes,
/// idling during `forbidden`.
///
/// ```
/// use eclair_core::{Instance, Rat};
/// use eclair_policies::Policy;
/// use eclair_sim::{simulate, IntervalSet};
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let slf = simulate(&toy, Policy::Slf, &Rat::one(), &IntervalSet::empty()).unwrap();
/// assert_eq!(slf.completion(6), Some(&Rat::new(7, 2)));
/// assert_eq!(slf.completion(5), Some(&Rat::int(7)));
/// ```
pub fn simulate(
    inst: &Instance,
    policy: Policy,
    speed: &Rat,
    forbidden: &IntervalSet,
) -> Result<Schedule, SimError> {
    load(inst, policy, speed)?
        .with_forbidden(forbidden.clone())
        .finish()
}

/// Simulates up to time `horizon` only (jobs may remain active).
pub fn simulate_until(
    inst: &Instance,
    policy: Policy,
    speed: &Rat,
    horizon: &Rat,
) -> Result<Schedule, SimError> {
    let mut sim = load(inst, policy, speed)?;
    sim.run_until(horizon)?;
    Ok(sim.into_schedule())
}

/// Simulates from given initial elapsed times (jobs absent from `initial`
/// start at zero), until every job completes.
pub fn simulate_from(
    inst: &Instance,
    policy: Policy,
    speed: &Rat,
    initial: &BTreeMap<JobId, Rat>,
) -> Result<Schedule, SimError> {
    if !speed.is_positive() {
        return Err(SimError::NonPositiveSpeed(speed.clone()));
    }
    let mut sim = Simulator::new(inst.epsilon.clone(), policy, speed.clone());
    for job in &inst.jobs {
        let e = initial.get(&job.id).cloned().unwrap_or_else(Rat::zero);
        sim.add_job_with_elapsed(job.clone(), e)?;
    }
    sim.finish()
}
