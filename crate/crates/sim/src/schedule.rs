//! The simulator's output: segments, completions and the event log.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use eclair_core::{JobId, Rat, ReleaseTag};
use eclair_policies::{Allocation, JobState};
use serde::Serialize;

/// Kinds of events in the log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A job was released.
    Arrival,
    /// A job's elapsed time reached `(1−ε)·p_j`.
    Known,
    /// A job's elapsed time reached `p_j`.
    Completion,
    /// The policy changed its choice without any of the above happening.
    Crossing,
    /// A forbidden interval began.
    ForbiddenStart,
    /// A forbidden interval ended.
    ForbiddenEnd,
    /// A caller-supplied elapsed-time watch fired.
    Watch,
}

/// One entry of the event log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    /// Time of the event.
    pub t: Rat,
    /// What happened.
    pub kind: EventKind,
    /// The job concerned, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub job: Option<JobId>,
}

/// A maximal time interval `[start, end)` with a constant allocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    /// Left end.
    pub start: Rat,
    /// Right end.
    pub end: Rat,
    /// Rates applied throughout; empty while idle.
    pub alloc: Allocation,
}

/// Static information about a simulated job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobInfo {
    /// Release tag.
    pub release: ReleaseTag,
    /// Size at the end of the simulation (`None` if never declared).
    pub size: Option<Rat>,
    /// Elapsed time at release (non-zero only for water-filling setups).
    pub initial: Rat,
}

/// An exact piecewise-constant schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// ε used to derive knowledge.
    pub epsilon: Rat,
    /// Machine speed.
    pub speed: Rat,
    /// The simulated jobs.
    pub jobs: BTreeMap<JobId, JobInfo>,
    /// Contiguous segments starting at time 0 (idle ones included).
    pub segments: Vec<Segment>,
    /// Completion times `C_j`.
    pub completions: BTreeMap<JobId, Rat>,
    /// Event log in time order.
    pub events: Vec<Event>,
    /// Time up to which the schedule was simulated.
    pub horizon: Rat,
    pub(crate) final_elapsed: BTreeMap<JobId, Rat>,
}

impl Schedule {
    /// Completion time of `id`, if it completed.
    pub fn completion(&self, id: JobId) -> Option<&Rat> {
        self.completions.get(&id)
    }

    /// `true` if every job completed.
    pub fn all_complete(&self) -> bool {
        self.completions.len() == self.jobs.len()
    }

    /// Elapsed times of all jobs released by `t` (`e_j(t)`).
    pub fn elapsed_at(&self, t: &Rat) -> BTreeMap<JobId, Rat> {
        if *t >= self.horizon {
            return self
                .final_elapsed
                .iter()
                .filter(|(id, _)| self.jobs[id].release.time <= *t)
                .map(|(id, e)| (*id, e.clone()))
                .collect();
        }
        let mut elapsed: BTreeMap<JobId, Rat> = self
            .jobs
            .iter()
            .filter(|(_, info)| info.release.time <= *t)
            .map(|(id, info)| (*id, info.initial.clone()))
            .collect();
        for seg in &self.segments {
            if seg.start >= *t {
                break;
            }
            let len = Rat::min_of(&seg.end, t) - &seg.start;
            for (id, rate) in seg.alloc.iter() {
                *elapsed.get_mut(&id).expect("only released jobs run") += rate * &len;
            }
        }
        elapsed
    }

    /// `true` if `id` is released by `t` and not yet completed at `t`.
    pub fn is_active(&self, id: JobId, t: &Rat) -> bool {
        let info = &self.jobs[&id];
        info.release.time <= *t && self.completions.get(&id).is_none_or(|c| c > t)
    }

    /// States of the jobs active at `t`: released by `t` (inclusive) and with
    /// positive remaining work after all processing in `[0, t)`.
    pub fn state_at(&self, t: &Rat) -> BTreeMap<JobId, JobState> {
        let elapsed = self.elapsed_at(t);
        let one_minus = Rat::one() - &self.epsilon;
        elapsed
            .into_iter()
            .filter(|(id, _)| self.is_active(*id, t))
            .map(|(id, e)| {
                let size = self.jobs[&id].size.clone();
                let known = size.as_ref().is_some_and(|p| e >= &one_minus * p);
                (
                    id,
                    JobState {
                        id,
                        elapsed: e,
                        size,
                        known,
                    },
                )
            })
            .collect()
    }

    /// `|A(t)|`, the number of active jobs at `t`.
    pub fn active_count(&self, t: &Rat) -> usize {
        self.jobs
            .keys()
            .filter(|&&id| self.is_active(id, t))
            .count()
    }

    /// Jobs receiving positive rate on a positive-measure part of `(a, b]`.
    pub fn touched_jobs(&self, a: &Rat, b: &Rat) -> BTreeSet<JobId> {
        let mut touched = BTreeSet::new();
        for seg in &self.segments {
            if seg.start >= *b {
                break;
            }
            if seg.end > *a {
                touched.extend(seg.alloc.ids().iter().copied());
            }
        }
        touched
    }

    /// The last time in `(0, t]` at which `id` was processed, i.e. the
    /// supremum of the times before `t` with positive rate.
    pub fn last_touch(&self, id: JobId, t: &Rat) -> Option<Rat> {
        self.segments
            .iter()
            .take_while(|seg| seg.start < *t)
            .filter(|seg| seg.alloc.contains(id))
            .last()
            .map(|seg| Rat::min_of(&seg.end, t).clone())
    }

    /// The allocation in force on `[t, t + dt)` for small `dt`.
    pub fn allocation_at(&self, t: &Rat) -> Option<&Allocation> {
        let i = self.segments.partition_point(|seg| seg.end <= *t);
        self.segments
            .get(i)
            .filter(|seg| seg.start <= *t)
            .map(|seg| &seg.alloc)
    }

    /// All times at which something happens: segment boundaries, releases,
    /// knowledge changes and completions, ascending and deduplicated.
    pub fn event_times(&self) -> Vec<Rat> {
        let mut times: BTreeSet<Rat> = BTreeSet::new();
        for seg in &self.segments {
            times.insert(seg.start.clone());
            times.insert(seg.end.clone());
        }
        for ev in &self.events {
            times.insert(ev.t.clone());
        }
        times.into_iter().collect()
    }

    /// Writes the segments as CSV rows `start,end,job_id,rate`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["start", "end", "job_id", "rate"])?;
        for seg in &self.segments {
            for (id, rate) in seg.alloc.iter() {
                w.write_record([
                    seg.start.to_string(),
                    seg.end.to_string(),
                    id.to_string(),
                    rate.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the event log as JSON lines `{"t": ..., "kind": ..., "job": ...}`.
    pub fn write_events_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for ev in &self.events {
            serde_json::to_writer(&mut out, ev)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
