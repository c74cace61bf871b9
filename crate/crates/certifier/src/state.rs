//! Helpers for reading schedule states around a loop time.

use std::collections::{BTreeMap, BTreeSet};

use eclair_core::{Instance, JobId, Rat};
use eclair_sim::{simulate_until, JobState, Policy, Schedule};

use crate::CertifierError;

pub(crate) fn run(
    inst: &Instance,
    policy: Policy,
    horizon: &Rat,
) -> Result<Schedule, CertifierError> {
    simulate_until(inst, policy, &Rat::one(), horizon)
        .map_err(|e| CertifierError::Input(format!("simulation failed: {e}")))
}

/// Active states at `x` of the jobs released strictly before `x`: the state
/// "right before" the batch released at `x` arrives.
pub(crate) fn before(sched: &Schedule, x: &Rat) -> BTreeMap<JobId, JobState> {
    let mut st = sched.state_at(x);
    st.retain(|id, _| sched.jobs[id].release.time < *x);
    st
}

/// Active states at `x` of the jobs released no later than `cut`.
pub(crate) fn released_by(sched: &Schedule, x: &Rat, cut: &Rat) -> BTreeMap<JobId, JobState> {
    let mut st = sched.state_at(x);
    st.retain(|id, _| sched.jobs[id].release.time <= *cut);
    st
}

/// Remaining work of every state (sizes are declared in certifier inputs).
pub(crate) fn remaining(states: &BTreeMap<JobId, JobState>) -> BTreeMap<JobId, Rat> {
    states
        .iter()
        .map(|(id, st)| {
            (
                *id,
                st.remaining().expect("certifier inputs declare every size"),
            )
        })
        .collect()
}

pub(crate) fn profile(map: &BTreeMap<JobId, Rat>) -> Vec<(JobId, Rat)> {
    map.iter().map(|(id, r)| (*id, r.clone())).collect()
}

pub(crate) fn known_ids(states: &BTreeMap<JobId, JobState>) -> BTreeSet<JobId> {
    states.values().filter(|s| s.known).map(|s| s.id).collect()
}

pub(crate) fn unknown_ids(states: &BTreeMap<JobId, JobState>) -> BTreeSet<JobId> {
    states.values().filter(|s| !s.known).map(|s| s.id).collect()
}

/// Elapsed times of the active states, for equivalence comparisons.
pub(crate) fn elapsed_of(states: &BTreeMap<JobId, JobState>) -> BTreeMap<JobId, Rat> {
    states
        .iter()
        .map(|(id, s)| (*id, s.elapsed.clone()))
        .collect()
}

/// The first time at which the elapsed time of `id` reaches `level`, if that
/// happens within the simulated horizon.
pub(crate) fn reach_time(sched: &Schedule, id: JobId, level: &Rat) -> Option<Rat> {
    let info = &sched.jobs[&id];
    let mut e = info.initial.clone();
    if e >= *level {
        return Some(info.release.time.clone());
    }
    for seg in &sched.segments {
        let rate = seg.alloc.rate(id);
        if !rate.is_positive() {
            continue;
        }
        let gain = &rate * (&seg.end - &seg.start);
        if &e + &gain >= *level {
            return Some(&seg.start + (level - &e) / &rate);
        }
        e += gain;
    }
    None
}

/// The largest job of a batch; ties go to the lowest id.
pub(crate) fn leader_of(inst: &Instance, batch: &BTreeSet<JobId>) -> Option<(JobId, Rat)> {
    let mut best: Option<(JobId, Rat)> = None;
    for id in batch {
        let p = inst.job(*id)?.size.clone()?;
        if best.as_ref().is_none_or(|(_, b)| p > *b) {
            best = Some((*id, p));
        }
    }
    best
}

/// Certifier operations need 0 < ε and every size declared.
pub(crate) fn check_input(inst: &Instance) -> Result<(), CertifierError> {
    if !inst.epsilon.is_positive() || inst.epsilon > Rat::one() {
        return Err(CertifierError::Input(format!(
            "epsilon must lie in (0, 1], got {}",
            inst.epsilon
        )));
    }
    if let Some(j) = inst.jobs.iter().find(|j| j.size.is_none()) {
        return Err(CertifierError::Input(format!(
            "job {} has no declared size",
            j.id
        )));
    }
    Ok(())
}
