//! The induction over time that builds a certificate.

use std::collections::{BTreeMap, BTreeSet};

use eclair_assignment::{canonical, split, union, AssignmentChecked, Graph};
use eclair_core::{busy_periods, ceil_inv, Instance, JobId, Rat};
use eclair_sim::{Policy, Schedule};
use serde::Serialize;

use crate::moves::move_jobs_open;
use crate::split::work_split;
use crate::state::{
    before, check_input, elapsed_of, known_ids, leader_of, profile, reach_time, remaining, run,
    unknown_ids,
};
use crate::update::{update_from, Branch};
use crate::verify::verify_certificate;
use crate::CertifierError;

/// The branch taken by one loop iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// SLF serves a known job at `s`; advance over the run of known jobs.
    Known,
    /// Jobs released while the leader is unknown were moved to just after `s`.
    Move,
    /// Fast-forward to the leader's knowledge time.
    FastForwardKnowledge,
    /// Fast-forward to the leader's last touch before `t`.
    FastForwardLastTouch,
}

/// One iteration of the construction loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IterationRecord {
    /// Loop time at the start of the iteration.
    pub s: Rat,
    /// Branch taken.
    pub case: Case,
    /// Leader of the batch released at `s` (arrival cases).
    pub leader: Option<JobId>,
    /// Knowledge time of the leader, when it is at most `t`.
    pub b_s: Option<Rat>,
    /// Last touch of the leader before `t`, when it stays unknown.
    pub last_touch: Option<Rat>,
    /// Jobs whose release was moved to just after `s`.
    pub moved: Vec<JobId>,
    /// Loop time after the iteration.
    pub next_s: Rat,
    /// Update procedure used by a fast-forward.
    pub branch: Option<Branch>,
    /// Prefix expansion of the assignment at `next_s`.
    pub phi: Rat,
    /// At `next_s`: no unknown job alive then is processed before `t`.
    pub inv1: bool,
    /// At `next_s`: SLF has the same states on both instances.
    pub inv2: bool,
    /// At `next_s`: the assignment matches the states and is valid.
    pub inv3: bool,
}

/// A certificate that `|SLF_J(t)| ≤ ⌈1/ε⌉·|OPT_J(t)|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// The instance `J`.
    pub original: Instance,
    /// The early-arriving, `t`-equivalent instance `J′`.
    pub transformed: Instance,
    /// The target time `t`.
    pub target_time: Rat,
    /// The assignment between `SLF_{J′}(t)` and `OPT_{J′}(t)`.
    pub assignment: AssignmentChecked,
    /// The construction's loop iterations.
    pub transcript: Vec<IterationRecord>,
}

impl Certificate {
    /// The certificate document: target time, transformed instance and
    /// assignment graph.
    pub fn to_json(&self) -> serde_json::Value {
        let transformed: serde_json::Value =
            serde_json::from_str(&self.transformed.to_json()).expect("instance JSON is valid");
        serde_json::json!({
            "target_time": self.target_time,
            "transformed": transformed,
            "assignment": self.assignment.graph.to_doc(),
            "phi": self.assignment.phi,
            "valid": self.assignment.valid,
        })
    }

    /// The transcript as JSON lines, one iteration per line.
    pub fn transcript_jsonl(&self) -> String {
        self.transcript
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialise") + "\n")
            .collect()
    }
}

/// Builds a certificate for `inst` at time `t`.
///
/// The construction works on the busy period that contains `t` (jobs
/// released before `t` only) and walks a loop time `s` from the start of the
/// period to `t`, keeping a valid assignment at `s`:
///
/// * if SLF serves a known job at `s`, both schedules run SRPT-like over the
///   known jobs, and the assignment is carved down by the common work;
/// * otherwise a batch arrives at `s`. Jobs released while the batch's
///   largest job (the leader) is still unknown and being processed are moved
///   to just after `s`; once no such job remains, the loop fast-forwards to
///   the leader's knowledge time, or to its last touch if it stays unknown
///   through `t`, updating the assignment for the batch.
///
/// At every iteration the three loop invariants are asserted; jobs released
/// exactly at `t` enter the final assignment as self-loops. The result is
/// verified with [`verify_certificate`] before it is returned.
///
/// ```
/// use eclair_certifier::{create_valid_assignment, verify_certificate};
/// use eclair_core::{Instance, Rat};
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let cert = create_valid_assignment(&toy, &Rat::int(9)).unwrap();
/// assert_eq!(cert.assignment.phi, Rat::int(2));
/// assert!(verify_certificate(&cert).pass);
/// ```
pub fn create_valid_assignment(inst: &Instance, t: &Rat) -> Result<Certificate, CertifierError> {
    check_input(inst)?;
    if t.is_negative() {
        return Err(CertifierError::Input(format!(
            "target time {t} is negative"
        )));
    }
    let (transformed, graph, transcript) = if inst.epsilon == Rat::one() {
        let slf = run(inst, Policy::Slf, t)?;
        let opt = run(inst, Policy::Srpt, t)?;
        let g = canonical(
            &profile(&remaining(&slf.state_at(t))),
            &profile(&remaining(&opt.state_at(t))),
        )
        .map_err(|e| CertifierError::claim("final.canonical", e.to_string()))?;
        (inst.clone(), g, Vec::new())
    } else {
        build(inst, t)?
    };
    let cert = Certificate {
        original: inst.clone(),
        transformed,
        target_time: t.clone(),
        assignment: AssignmentChecked::check(graph, &inst.epsilon),
        transcript,
    };
    let report = verify_certificate(&cert);
    if !report.pass {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        return Err(CertifierError::Counterexample(Box::new(
            crate::CounterexampleReport {
                check: "verify".into(),
                detail: failed.join("; "),
                s: Some(t.clone()),
                transcript: cert.transcript,
            },
        )));
    }
    Ok(cert)
}

type Built = (Instance, Graph, Vec<IterationRecord>);

fn build(inst: &Instance, t: &Rat) -> Result<Built, CertifierError> {
    let old = Instance {
        epsilon: inst.epsilon.clone(),
        jobs: inst
            .jobs
            .iter()
            .filter(|j| j.release.time < *t)
            .cloned()
            .collect(),
        meta: None,
    };
    let periods = busy_periods(&old).map_err(|e| CertifierError::Input(e.to_string()))?;
    let arriving: Vec<(JobId, Rat)> = inst
        .jobs
        .iter()
        .filter(|j| j.release.time == *t)
        .map(|j| (j.id, j.size.clone().expect("checked input")))
        .collect();
    let at_t = Graph::perfect_matching(&arriving);
    let Some(period) = periods.into_iter().find(|p| p.start < *t && *t < p.end) else {
        return Ok((inst.clone(), at_t, Vec::new()));
    };
    let (moved, h, transcript) = Walk::new(period.instance, period.start, t.clone())?.run()?;
    let tags: BTreeMap<JobId, _> = moved
        .jobs
        .iter()
        .map(|j| (j.id, j.release.clone()))
        .collect();
    let mut transformed = inst.clone();
    for job in &mut transformed.jobs {
        if let Some(tag) = tags.get(&job.id) {
            job.release = tag.clone();
        }
    }
    Ok((transformed, union(&h, &at_t).pruned(), transcript))
}

struct Walk {
    base: Schedule,
    jp: Instance,
    s: Rat,
    t: Rat,
    h: Graph,
    bound: Rat,
    transcript: Vec<IterationRecord>,
}

impl Walk {
    fn new(period: Instance, start: Rat, t: Rat) -> Result<Walk, CertifierError> {
        let base = run(&period, Policy::Slf, &t)?;
        let bound = Rat::int(ceil_inv(&period.epsilon));
        Ok(Walk {
            base,
            jp: period,
            s: start,
            t,
            h: Graph::empty(),
            bound,
            transcript: Vec::new(),
        })
    }

    fn run(mut self) -> Result<Built, CertifierError> {
        let limit = 5 * self.jp.jobs.len() + 5;
        loop {
            if self.transcript.len() > limit {
                return Err(self.fail(
                    "progress",
                    format!("no termination after {limit} iterations"),
                ));
            }
            let slf = run(&self.jp, Policy::Slf, &self.t)?;
            let opt = run(&self.jp, Policy::Srpt, &self.t)?;
            self.invariants(&slf, &opt)?;
            if self.s >= self.t {
                return Ok((self.jp, self.h, self.transcript));
            }
            let s = self.s.clone();
            let st = before(&slf, &s);
            let known = known_ids(&st);
            let serving_known = slf
                .allocation_at(&s)
                .is_some_and(|a| a.ids().iter().any(|id| known.contains(id)));
            let step = if serving_known {
                self.known_step(&slf, &opt, &known)
            } else {
                self.arrival_step(slf, opt)
            };
            let record = step.map_err(|e| e.at(&s, &self.transcript))?;
            self.transcript.push(record);
        }
    }

    fn fail(&self, check: &str, detail: String) -> CertifierError {
        CertifierError::claim(check, detail).at(&self.s, &self.transcript)
    }

    fn invariants(&mut self, slf: &Schedule, opt: &Schedule) -> Result<(), CertifierError> {
        let s = &self.s;
        let st = before(slf, s);
        let touched = slf.touched_jobs(s, &self.t);
        let inv1 = unknown_ids(&st).is_disjoint(&touched);
        let inv2 = elapsed_of(&st) == elapsed_of(&before(&self.base, s));
        let lv: BTreeMap<JobId, Rat> = self.h.left_volumes().into_iter().collect();
        let rv: BTreeMap<JobId, Rat> = self.h.right_volumes().into_iter().collect();
        let marg = lv == remaining(&st) && rv == remaining(&before(opt, s));
        let inv3 = marg && self.h.prefix_expansion() <= self.bound;
        if let Some(last) = self.transcript.last_mut() {
            last.inv1 = inv1;
            last.inv2 = inv2;
            last.inv3 = inv3;
        }
        if !inv1 {
            let hit: Vec<JobId> = unknown_ids(&st).intersection(&touched).copied().collect();
            return Err(self.fail(
                "inv1",
                format!(
                    "unknown jobs {hit:?} alive at {s} are processed before {}",
                    self.t
                ),
            ));
        }
        if !inv2 {
            return Err(self.fail(
                "inv2",
                format!("SLF states at {s} differ from the original instance"),
            ));
        }
        if !inv3 {
            return Err(self.fail(
                "inv3",
                format!(
                    "assignment at {s} has marginals matching: {marg}, φ = {}",
                    self.h.prefix_expansion()
                ),
            ));
        }
        Ok(())
    }

    fn canonical_at(&self, slf: &Schedule, opt: &Schedule) -> Result<Graph, CertifierError> {
        let s = &self.s;
        let sigma = canonical(
            &profile(&remaining(&before(slf, s))),
            &profile(&remaining(&before(opt, s))),
        )
        .map_err(|e| CertifierError::claim("canonical", e.to_string()))?;
        let phi = sigma.prefix_expansion();
        if phi > self.bound {
            return Err(CertifierError::claim(
                "canonical.validity",
                format!("canonical assignment at {s} has φ = {phi}"),
            ));
        }
        Ok(sigma)
    }

    fn known_step(
        &mut self,
        slf: &Schedule,
        opt: &Schedule,
        known: &BTreeSet<JobId>,
    ) -> Result<IterationRecord, CertifierError> {
        let s = self.s.clone();
        let mut end = s.clone();
        for seg in slf.segments.iter().filter(|seg| seg.end > s) {
            if seg.start > end
                || seg.alloc.is_idle()
                || !seg.alloc.ids().iter().all(|id| known.contains(id))
            {
                break;
            }
            end = seg.end.clone();
        }
        let end = Rat::min_of(&end, &self.t).clone();
        if let Some(j) = self
            .jp
            .jobs
            .iter()
            .find(|j| j.release.time > s && j.release.time < end)
        {
            return Err(CertifierError::claim(
                "known.no_arrivals",
                format!("job {} is released during the known run ({s}, {end})", j.id),
            ));
        }
        let sigma = self.canonical_at(slf, opt)?;
        let (hp, _) = split(&sigma, &(&end - &s))
            .map_err(|e| CertifierError::claim("known.split", e.to_string()))?;
        self.h = hp.with_default_order();
        self.s = end.clone();
        Ok(self.record(s, Case::Known, end))
    }

    fn record(&self, s: Rat, case: Case, next_s: Rat) -> IterationRecord {
        IterationRecord {
            s,
            case,
            leader: None,
            b_s: None,
            last_touch: None,
            moved: Vec::new(),
            next_s,
            branch: None,
            phi: self.h.prefix_expansion(),
            inv1: true,
            inv2: true,
            inv3: true,
        }
    }

    fn arrival_step(
        &mut self,
        slf: Schedule,
        opt: Schedule,
    ) -> Result<IterationRecord, CertifierError> {
        let s = self.s.clone();
        let batch: BTreeSet<JobId> = self
            .jp
            .jobs
            .iter()
            .filter(|j| j.release.time == s)
            .map(|j| j.id)
            .collect();
        let Some((leader, p)) = leader_of(&self.jp, &batch) else {
            return Err(CertifierError::claim(
                "arrival.batch",
                format!("SLF serves no known job at {s} and no job is released then"),
            ));
        };
        let level = (Rat::one() - &self.jp.epsilon) * &p;
        let b_s = reach_time(&slf, leader, &level).filter(|b| *b <= self.t);
        let (case, ell, last_touch) = match &b_s {
            Some(b) => (Case::FastForwardKnowledge, b.clone(), None),
            None => {
                let lt = slf.last_touch(leader, &self.t).ok_or_else(|| {
                    CertifierError::claim(
                        "arrival.last_touch",
                        format!("leader {leader} is never touched"),
                    )
                })?;
                if slf
                    .state_at(&self.t)
                    .get(&leader)
                    .is_some_and(|st| st.known)
                {
                    return Err(CertifierError::claim(
                        "arrival.leader_state",
                        format!("leader {leader} is known and alive at {}", self.t),
                    ));
                }
                (Case::FastForwardLastTouch, lt.clone(), Some(lt))
            }
        };
        let arrivals: Vec<JobId> = self
            .jp
            .jobs
            .iter()
            .filter(|j| j.release.time > s && j.release.time < ell)
            .map(|j| j.id)
            .collect();
        let mut rec = self.record(s.clone(), case, ell.clone());
        rec.leader = Some(leader);
        rec.b_s = b_s.clone();
        rec.last_touch = last_touch;
        rec.moved = arrivals.clone();
        if b_s.is_some() && !arrivals.is_empty() {
            self.jp = move_jobs_open(&self.jp, &s, &ell)?;
            rec.case = Case::Move;
            rec.next_s = s;
            return Ok(rec);
        }
        let (slf, opt) = if arrivals.is_empty() {
            (slf, opt)
        } else {
            self.jp = move_jobs_open(&self.jp, &s, &ell)?;
            (
                run(&self.jp, Policy::Slf, &self.t)?,
                run(&self.jp, Policy::Srpt, &self.t)?,
            )
        };
        let batch: BTreeSet<JobId> = self
            .jp
            .jobs
            .iter()
            .filter(|j| j.release.time == s)
            .map(|j| j.id)
            .collect();
        let sigma = self.canonical_at(&slf, &opt)?;
        let ws = work_split(&self.jp, &slf, &opt, &s, &ell, &batch)?;
        let out = update_from(ws, &sigma)?;
        self.h = out.graph;
        self.s = ell;
        rec.branch = Some(out.branch);
        rec.phi = self.h.prefix_expansion();
        Ok(rec)
    }
}
