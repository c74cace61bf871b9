//! Moving release times earlier, and the two relations between an instance
//! and its transformed copy.

use std::collections::BTreeMap;

use eclair_core::{Instance, JobId, Rat, ReleaseTag};
use eclair_sim::Policy;

use crate::state::{elapsed_of, run};
use crate::CertifierError;

/// Moves every job released in `(x, y]` to just after `x`.
///
/// Moved jobs get the release tag `(x, k)` with fresh epochs `k` above every
/// epoch already used at `x`, assigned in order of their original release
/// tags (jobs that shared a tag share the new one). All other jobs are
/// untouched.
///
/// ```
/// use eclair_certifier::move_jobs;
/// use eclair_core::{Instance, Job, Rat, ReleaseTag};
///
/// let jobs = (1..=3).map(|i| Job::new(i, Rat::int(i as i64), Rat::one())).collect();
/// let inst = Instance::new(Rat::new(1, 2), jobs).unwrap();
/// let moved = move_jobs(&inst, &Rat::zero(), &Rat::int(2)).unwrap();
/// let tags: Vec<ReleaseTag> = moved.jobs.iter().map(|j| j.release.clone()).collect();
/// assert_eq!(tags, vec![
///     ReleaseTag { time: Rat::zero(), epoch: 1 },
///     ReleaseTag { time: Rat::zero(), epoch: 2 },
///     ReleaseTag::at(Rat::int(3)),
/// ]);
/// ```
pub fn move_jobs(inst: &Instance, x: &Rat, y: &Rat) -> Result<Instance, CertifierError> {
    if x > y {
        return Err(CertifierError::Input(format!(
            "cannot move jobs from ({x}, {y}]"
        )));
    }
    Ok(shift(inst, x, |q| q > x && q <= y))
}

/// Like [`move_jobs`] on the open interval `(x, y)`: jobs released exactly
/// at `y` stay where they are.
pub fn move_jobs_open(inst: &Instance, x: &Rat, y: &Rat) -> Result<Instance, CertifierError> {
    if x > y {
        return Err(CertifierError::Input(format!(
            "cannot move jobs from ({x}, {y})"
        )));
    }
    Ok(shift(inst, x, |q| q > x && q < y))
}

fn shift(inst: &Instance, x: &Rat, moves: impl Fn(&Rat) -> bool) -> Instance {
    let next = inst
        .jobs
        .iter()
        .filter(|j| j.release.time == *x)
        .map(|j| j.release.epoch)
        .max()
        .map_or(1, |e| e + 1);
    let mut tags: Vec<&ReleaseTag> = inst
        .jobs
        .iter()
        .filter(|j| moves(&j.release.time))
        .map(|j| &j.release)
        .collect();
    tags.sort();
    tags.dedup();
    let mut fresh: BTreeMap<ReleaseTag, ReleaseTag> = BTreeMap::new();
    for (offset, tag) in (0..).zip(tags) {
        fresh.insert(
            tag.clone(),
            ReleaseTag {
                time: x.clone(),
                epoch: next + offset,
            },
        );
    }
    let mut out = inst.clone();
    for job in &mut out.jobs {
        if let Some(tag) = fresh.get(&job.release) {
            job.release = tag.clone();
        }
    }
    out
}

/// `true` if `moved` differs from `original` only by earlier release tags of
/// jobs released before `t` (same ids, sizes and ε).
pub fn is_early_arriving(original: &Instance, moved: &Instance, t: &Rat) -> bool {
    if original.epsilon != moved.epsilon || original.jobs.len() != moved.jobs.len() {
        return false;
    }
    let by_id: BTreeMap<JobId, _> = moved.jobs.iter().map(|j| (j.id, j)).collect();
    original.jobs.iter().all(|j| {
        by_id.get(&j.id).is_some_and(|m| {
            m.size == j.size
                && if j.release.time < *t {
                    m.release <= j.release
                } else {
                    m.release == j.release
                }
        })
    })
}

/// `true` if SLF has the same active jobs with the same elapsed times at `t`
/// on both instances.
///
/// ```
/// use eclair_certifier::check_t_equivalence;
/// use eclair_core::{Instance, Rat};
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// assert!(check_t_equivalence(&toy, &toy, &Rat::int(9)));
/// ```
pub fn check_t_equivalence(original: &Instance, moved: &Instance, t: &Rat) -> bool {
    let (Ok(a), Ok(b)) = (run(original, Policy::Slf, t), run(moved, Policy::Slf, t)) else {
        return false;
    };
    elapsed_of(&a.state_at(t)) == elapsed_of(&b.state_at(t))
}
