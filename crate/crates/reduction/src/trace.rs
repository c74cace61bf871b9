//! Sweeps over finished schedules.

use std::collections::{BTreeMap, BTreeSet};

use eclair_core::{JobId, Rat};
use eclair_sim::Schedule;

/// Elapsed times of the released jobs at each of `times` (ascending), in one
/// pass over the segments.
pub(crate) fn elapsed_profile(sched: &Schedule, times: &[Rat]) -> Vec<BTreeMap<JobId, Rat>> {
    let mut releases: Vec<(&Rat, JobId, &Rat)> = sched
        .jobs
        .iter()
        .map(|(id, info)| (&info.release.time, *id, &info.initial))
        .collect();
    releases.sort();
    let mut elapsed: BTreeMap<JobId, Rat> = BTreeMap::new();
    let mut next_release = 0;
    let mut seg_i = 0;
    let mut cursor = Rat::zero();
    let mut out = Vec::with_capacity(times.len());
    for t in times {
        while let Some((r, id, initial)) = releases.get(next_release) {
            if *r > t {
                break;
            }
            elapsed.insert(*id, (*initial).clone());
            next_release += 1;
        }
        while let Some(seg) = sched.segments.get(seg_i) {
            if seg.start >= *t {
                break;
            }
            let from = Rat::max_of(&cursor, &seg.start).clone();
            let to = Rat::min_of(&seg.end, t).clone();
            if to > from {
                let len = &to - &from;
                for (id, rate) in seg.alloc.iter() {
                    *elapsed.get_mut(&id).expect("only released jobs run") += rate * &len;
                }
            }
            cursor = to;
            if seg.end <= *t {
                seg_i += 1;
            } else {
                break;
            }
        }
        out.push(elapsed.clone());
    }
    out
}

/// The segments as `(start, end, served jobs)`, with neighbours serving the
/// same jobs merged. Rates are left out: two schedules of the same policy at
/// different speeds serve the same jobs at proportional rates.
pub(crate) fn served_trace(sched: &Schedule) -> Vec<(Rat, Rat, Vec<JobId>)> {
    let mut out: Vec<(Rat, Rat, Vec<JobId>)> = Vec::new();
    for seg in &sched.segments {
        let ids = seg.alloc.jobs();
        match out.last_mut() {
            Some((_, end, last)) if *last == ids && *end == seg.start => *end = seg.end.clone(),
            _ => out.push((seg.start.clone(), seg.end.clone(), ids)),
        }
    }
    out
}

/// The ascending union of the event times of `schedules`, with time zero.
pub(crate) fn union_times(schedules: &[&Schedule]) -> Vec<Rat> {
    let mut times: BTreeSet<Rat> = BTreeSet::new();
    times.insert(Rat::zero());
    for s in schedules {
        times.extend(s.event_times());
    }
    times.into_iter().collect()
}
