//! Jobs, release tags, instances, and their JSON form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Rat};

/// Job identifier. Identifiers are positive and unique within an instance.
pub type JobId = u64;

/// A release date with an epoch tag for "immediately after" semantics.
///
/// Tags order lexicographically by `(time, epoch)`. A positive epoch marks a
/// job whose release was moved to the instant right after `time`: it arrives
/// at `time` for the dynamics (epochs have zero duration), yet counts as
/// released *after* everything tagged `(time, 0)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReleaseTag {
    /// Release time.
    pub time: Rat,
    /// Zero for ordinary releases; positive for moved ones.
    pub epoch: u64,
}

impl ReleaseTag {
    /// An ordinary (epoch zero) release at `time`.
    pub fn at(time: Rat) -> ReleaseTag {
        ReleaseTag { time, epoch: 0 }
    }
}

/// A job with release tag and (possibly not yet declared) size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Job {
    /// Unique positive identifier.
    pub id: JobId,
    /// Release tag `q_j`.
    pub release: ReleaseTag,
    /// Processing time `p_j > 0`, or `None` while an adversary has not fixed it.
    pub size: Option<Rat>,
}

impl Job {
    /// A declared job released at `release` (epoch zero).
    pub fn new(id: JobId, release: Rat, size: Rat) -> Job {
        Job {
            id,
            release: ReleaseTag::at(release),
            size: Some(size),
        }
    }

    /// A job whose size is still undeclared.
    pub fn undeclared(id: JobId, release: Rat) -> Job {
        Job {
            id,
            release: ReleaseTag::at(release),
            size: None,
        }
    }

    /// `true` once the size is fixed.
    pub fn declared(&self) -> bool {
        self.size.is_some()
    }
}

/// A scheduling instance: the clairvoyance parameter and the jobs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    /// The clairvoyance parameter ε ∈ [0, 1].
    pub epsilon: Rat,
    /// Jobs in arbitrary order; ids are unique.
    pub jobs: Vec<Job>,
    /// Free-form provenance (sampler kind, parameters, seed); not interpreted.
    pub meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct JobDoc {
    id: JobId,
    release: Rat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size: Option<Rat>,
    #[serde(default, skip_serializing_if = "is_zero_epoch")]
    epoch: u64,
}

fn is_zero_epoch(e: &u64) -> bool {
    *e == 0
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    epsilon: Rat,
    jobs: Vec<JobDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

impl Instance {
    /// Builds and validates an instance.
    pub fn new(epsilon: Rat, jobs: Vec<Job>) -> Result<Instance, Error> {
        let inst = Instance {
            epsilon,
            jobs,
            meta: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Jobs released at time zero with the given sizes and ids `1..=n`.
    ///
    /// ```
    /// use eclair_core::{Instance, Rat};
    ///
    /// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
    /// assert_eq!(toy.jobs.len(), 6);
    /// assert_eq!(toy.job(6).unwrap().size, Some(Rat::int(1)));
    /// ```
    pub fn simultaneous(epsilon: Rat, sizes: &[i64]) -> Instance {
        let jobs = sizes
            .iter()
            .enumerate()
            .map(|(i, &p)| Job::new(i as JobId + 1, Rat::zero(), Rat::int(p)))
            .collect();
        Instance::new(epsilon, jobs).expect("valid simultaneous instance")
    }

    /// Checks the instance invariants: unique positive ids, non-negative
    /// releases, positive declared sizes and ε ∈ [0, 1].
    pub fn validate(&self) -> Result<(), Error> {
        if self.epsilon.is_negative() || self.epsilon > Rat::one() {
            return Err(Error::EpsilonRange(self.epsilon.clone()));
        }
        let mut seen = BTreeSet::new();
        for job in &self.jobs {
            if job.id == 0 {
                return Err(Error::ZeroId);
            }
            if !seen.insert(job.id) {
                return Err(Error::DuplicateId(job.id));
            }
            if job.release.time.is_negative() {
                return Err(Error::NegativeRelease(job.id));
            }
            if let Some(p) = &job.size {
                if !p.is_positive() {
                    return Err(Error::NonPositiveSize(job.id));
                }
            }
        }
        Ok(())
    }

    /// Looks a job up by id.
    pub fn job(&self, id: JobId) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    /// `true` if every job has a declared size.
    pub fn all_declared(&self) -> bool {
        self.jobs.iter().all(Job::declared)
    }

    /// Sum of declared sizes.
    pub fn total_size(&self) -> Rat {
        self.jobs.iter().filter_map(|j| j.size.as_ref()).sum()
    }

    /// The same jobs with a different ε.
    pub fn with_epsilon(&self, epsilon: Rat) -> Result<Instance, Error> {
        let inst = Instance {
            epsilon,
            jobs: self.jobs.clone(),
            meta: self.meta.clone(),
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Serialises to the instance JSON document.
    pub fn to_json(&self) -> String {
        let doc = InstanceDoc {
            epsilon: self.epsilon.clone(),
            jobs: self
                .jobs
                .iter()
                .map(|j| JobDoc {
                    id: j.id,
                    release: j.release.time.clone(),
                    size: j.size.clone(),
                    epoch: j.release.epoch,
                })
                .collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("instance serialises")
    }
}

/// Parses an instance JSON document.
///
/// Rationals are strings in the form `"a/b"`, `"a"` or a finite decimal.
///
/// ```
/// use eclair_core::{parse_instance, Rat};
///
/// let inst = parse_instance(r#"{"epsilon":"0.5","jobs":[{"id":1,"release":"0","size":"5"}]}"#).unwrap();
/// assert_eq!(inst.epsilon, Rat::new(1, 2));
/// assert_eq!(inst.jobs[0].size, Some(Rat::int(5)));
/// assert!(parse_instance(r#"{"epsilon":"2","jobs":[]}"#).is_err());
/// ```
pub fn parse_instance(text: &str) -> Result<Instance, Error> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let inst = Instance {
        epsilon: doc.epsilon,
        jobs: doc
            .jobs
            .into_iter()
            .map(|j| Job {
                id: j.id,
                release: ReleaseTag {
                    time: j.release,
                    epoch: j.epoch,
                },
                size: j.size,
            })
            .collect(),
        meta: doc.meta,
    };
    inst.validate()?;
    Ok(inst)
}

/// Multiplies every declared size by `factor`, keeping releases and ε.
///
/// ```
/// use eclair_core::{scale_instance, Instance, Rat};
///
/// let inst = Instance::simultaneous(Rat::new(1, 2), &[5, 4]);
/// let half = scale_instance(&inst, &Rat::new(1, 2)).unwrap();
/// assert_eq!(half.jobs[0].size, Some(Rat::new(5, 2)));
/// assert_eq!(half.jobs[1].size, Some(Rat::int(2)));
/// ```
pub fn scale_instance(inst: &Instance, factor: &Rat) -> Result<Instance, Error> {
    if !factor.is_positive() {
        return Err(Error::NonPositiveFactor(factor.clone()));
    }
    Ok(Instance {
        epsilon: inst.epsilon.clone(),
        jobs: inst
            .jobs
            .iter()
            .map(|j| Job {
                id: j.id,
                release: j.release.clone(),
                size: j.size.as_ref().map(|p| p * factor),
            })
            .collect(),
        meta: inst.meta.clone(),
    })
}

/// A maximal interval during which a non-idling unit-speed machine is busy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BusyPeriod {
    /// First release in the period.
    pub start: Rat,
    /// Time at which all work released in the period is done.
    pub end: Rat,
    /// The jobs released in the period (same ε).
    pub instance: Instance,
}

/// Splits the timeline into maximal busy periods of a non-idling unit-speed
/// machine. Periods that touch (a release exactly when the previous work
/// drains) are merged, since the machine never actually idles between them.
///
/// ```
/// use eclair_core::{busy_periods, Instance, Job, Rat};
///
/// let inst = Instance::new(Rat::new(1, 2), vec![
///     Job::new(1, Rat::zero(), Rat::one()),
///     Job::new(2, Rat::int(5), Rat::one()),
/// ]).unwrap();
/// let periods = busy_periods(&inst).unwrap();
/// assert_eq!(periods.len(), 2);
/// assert_eq!((periods[1].start.clone(), periods[1].end.clone()), (Rat::int(5), Rat::int(6)));
/// ```
pub fn busy_periods(inst: &Instance) -> Result<Vec<BusyPeriod>, Error> {
    let mut jobs: Vec<&Job> = inst.jobs.iter().collect();
    if let Some(j) = jobs.iter().find(|j| !j.declared()) {
        return Err(Error::Undeclared(j.id));
    }
    jobs.sort_by(|a, b| (&a.release, a.id).cmp(&(&b.release, b.id)));
    let mut periods: Vec<BusyPeriod> = Vec::new();
    let mut current: Option<(Rat, Rat, Vec<Job>)> = None;
    for job in jobs {
        let size = job.size.clone().expect("checked above");
        match current.as_mut() {
            Some((_, end, members)) if job.release.time <= *end => {
                *end += size;
                members.push(job.clone());
            }
            _ => {
                if let Some((start, end, members)) = current.take() {
                    periods.push(period(inst, start, end, members));
                }
                let start = job.release.time.clone();
                let end = &start + &size;
                current = Some((start, end, vec![job.clone()]));
            }
        }
    }
    if let Some((start, end, members)) = current {
        periods.push(period(inst, start, end, members));
    }
    Ok(periods)
}

fn period(inst: &Instance, start: Rat, end: Rat, jobs: Vec<Job>) -> BusyPeriod {
    BusyPeriod {
        start,
        end,
        instance: Instance {
            epsilon: inst.epsilon.clone(),
            jobs,
            meta: None,
        },
    }
}
