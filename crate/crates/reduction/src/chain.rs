//! SETFI against SETF, and the count chain between SLF and fast SETF.

use std::collections::BTreeMap;

use eclair_core::{ceil_inv, scale_instance, Instance, JobId, Rat};
use eclair_sim::{simulate, EventKind, IntervalSet, Policy, Schedule};
use serde::Serialize;

use crate::trace::{elapsed_profile, served_trace, union_times};
use crate::ReductionError;

/// Outcome of [`setfi_vs_setf`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetfiReport {
    /// `true` if both properties hold at every event time.
    pub holds: bool,
    /// Number of event times checked.
    pub checked_times: usize,
    /// First `(t, job, e^SETFI_j(t), e^SETF_j(t))` with SETFI ahead.
    pub elapsed_violation: Option<(Rat, JobId, Rat, Rat)>,
    /// First `(t, |SETF(t)|, |SETFI(t)|)` with SETF holding more jobs.
    pub count_violation: Option<(Rat, usize, usize)>,
    /// Total flow time of SETF.
    pub flow_setf: Rat,
    /// Total flow time of SETFI.
    pub flow_setfi: Rat,
}

/// Runs SETF and SETFI (SETF idling during `forbidden`) on `inst` at unit
/// speed and checks, at the union of their event times, that every job has
/// received at least as much work under SETF as under SETFI and that SETF
/// holds no more active jobs than SETFI.
///
/// ```
/// use eclair_core::{Instance, Rat};
/// use eclair_reduction::setfi_vs_setf;
/// use eclair_sim::IntervalSet;
///
/// let inst = Instance::simultaneous(Rat::new(1, 2), &[2, 1]);
/// let gap = IntervalSet::from_pairs(vec![(Rat::one(), Rat::int(2))]).unwrap();
/// let report = setfi_vs_setf(&inst, &gap).unwrap();
/// assert!(report.holds);
/// assert_eq!(report.flow_setf, Rat::int(5));
/// assert_eq!(report.flow_setfi, Rat::int(7));
/// ```
pub fn setfi_vs_setf(
    inst: &Instance,
    forbidden: &IntervalSet,
) -> Result<SetfiReport, ReductionError> {
    require_declared(inst)?;
    let setf = simulate(inst, Policy::Setf, &Rat::one(), &IntervalSet::empty())?;
    let setfi = simulate(inst, Policy::Setf, &Rat::one(), forbidden)?;
    let times = union_times(&[&setf, &setfi]);
    let (elapsed_violation, count_violation) = compare_setfi(&setf, &setfi, &times);
    Ok(SetfiReport {
        holds: elapsed_violation.is_none() && count_violation.is_none(),
        checked_times: times.len(),
        elapsed_violation,
        count_violation,
        flow_setf: flow(&setf),
        flow_setfi: flow(&setfi),
    })
}

type ElapsedWitness = (Rat, JobId, Rat, Rat);
type CountWitness = (Rat, usize, usize);

fn compare_setfi(
    setf: &Schedule,
    setfi: &Schedule,
    times: &[Rat],
) -> (Option<ElapsedWitness>, Option<CountWitness>) {
    let fast = elapsed_profile(setf, times);
    let slow = elapsed_profile(setfi, times);
    let elapsed_violation = times
        .iter()
        .zip(fast.iter().zip(&slow))
        .find_map(|(t, (f, s))| {
            s.iter().find_map(|(id, e)| {
                let ef = &f[id];
                (e > ef).then(|| (t.clone(), *id, e.clone(), ef.clone()))
            })
        });
    let count_violation = times.iter().find_map(|t| {
        let (a, b) = (setf.active_count(t), setfi.active_count(t));
        (a > b).then(|| (t.clone(), a, b))
    });
    (elapsed_violation, count_violation)
}

fn flow(sched: &Schedule) -> Rat {
    sched
        .completions
        .iter()
        .map(|(id, c)| c - &sched.jobs[id].release.time)
        .sum()
}

fn require_declared(inst: &Instance) -> Result<(), ReductionError> {
    match inst.jobs.iter().find(|j| j.size.is_none()) {
        Some(j) => Err(ReductionError::Input(format!(
            "job {} has no declared size",
            j.id
        ))),
        None => Ok(()),
    }
}

fn require_open_epsilon(epsilon: &Rat) -> Result<(), ReductionError> {
    if !epsilon.is_positive() || *epsilon >= Rat::one() {
        return Err(ReductionError::Input(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// One link of the chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Link {
    /// Short name of the link.
    pub name: String,
    /// `true` if the link holds everywhere.
    pub holds: bool,
    /// First time at which it fails.
    pub witness: Option<Rat>,
    /// What went wrong, if anything.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Link {
    fn new(name: &str, failure: Option<(Rat, String)>) -> Link {
        let holds = failure.is_none();
        let (witness, detail) = failure.map_or((None, None), |(t, d)| (Some(t), Some(d)));
        Link {
            name: name.into(),
            holds,
            witness,
            detail,
        }
    }
}

/// Active-job counts of the four schedules at one event time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainRow {
    /// Event time.
    pub t: Rat,
    /// `|SETF_{J,1+δ}(t)|`.
    pub setf_fast: usize,
    /// `|SETF_{J′}(t)|`.
    pub setf_scaled: usize,
    /// `|SETFI_{J′,I}(t)|`.
    pub setfi: usize,
    /// `|SLF_J(t)|`.
    pub slf: usize,
}

/// Outcome of [`reduction_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    /// Clairvoyance parameter of SLF.
    pub epsilon: Rat,
    /// `δ = ε/(1−ε)`.
    pub delta: Rat,
    /// `I`: the intervals during which SLF runs a known job.
    pub forbidden: Vec<(Rat, Rat)>,
    /// The links, in chain order.
    pub links: Vec<Link>,
    /// Counts at every event time of the four schedules.
    pub rows: Vec<ChainRow>,
    /// `true` if every link holds.
    pub holds: bool,
}

impl ReductionReport {
    /// The report as one JSON document.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialises")
    }
}

/// The intervals of positive length during which SLF serves a known job.
/// SLF serves either one known job or a pool of unknown jobs, never a mix.
/// Segments are maximal runs of one allocation, so a job served alone may
/// become known inside a segment; the known part starts at its knowledge
/// time.
fn known_intervals(slf: &Schedule) -> Result<IntervalSet, ReductionError> {
    let known_at: BTreeMap<JobId, &Rat> = slf
        .events
        .iter()
        .filter(|ev| ev.kind == EventKind::Known)
        .filter_map(|ev| ev.job.map(|id| (id, &ev.t)))
        .collect();
    let mut pairs = Vec::new();
    for seg in &slf.segments {
        let ids = seg.alloc.ids();
        let [id] = ids else {
            continue;
        };
        if let Some(&k) = known_at.get(id) {
            let from = Rat::max_of(k, &seg.start);
            if *from < seg.end {
                pairs.push((from.clone(), seg.end.clone()));
            }
        }
    }
    Ok(IntervalSet::from_pairs(pairs)?)
}

/// Runs SLF on `J` (with clairvoyance `ε`), SETF with speed `1 + δ` on `J`,
/// and SETF and SETFI (idle during `I`) at unit speed on `J′`, the instance
/// with every size multiplied by `1 − ε`. The links checked at the union of
/// all event times are:
///
/// 1. `scale_identity`: the two SETF runs serve the same jobs over the same
///    segments and complete every job at the same time.
/// 2. `scaled_counts`: `|SETF_{J,1+δ}(t)| = |SETF_{J′}(t)|`.
/// 3. `setfi_dominance`: on `J′`, SETF is ahead of SETFI on every job and
///    `|SETF_{J′}(t)| ≤ |SETFI_{J′,I}(t)|`.
/// 4. `setfi_mirrors_slf`: `e^SETFI_j(t) = min(e^SLF_j(t), (1−ε)p_j)` —
///    outside `I` both schedules run the least-served jobs that SLF does not
///    know yet.
/// 5. `setfi_below_slf`: `|SETFI_{J′,I}(t)| ≤ |SLF_J(t)|`.
/// 6. `chain`: `|SETF_{J,1+δ}(t)| ≤ |SLF_J(t)|`.
///
/// ```
/// use eclair_core::{Instance, Rat};
/// use eclair_reduction::reduction_check;
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let report = reduction_check(&toy, &Rat::new(1, 2)).unwrap();
/// assert!(report.holds);
/// assert_eq!(report.delta, Rat::one());
/// assert!(report.rows.iter().all(|r| r.setf_fast <= r.slf));
/// ```
pub fn reduction_check(inst: &Instance, epsilon: &Rat) -> Result<ReductionReport, ReductionError> {
    require_open_epsilon(epsilon)?;
    require_declared(inst)?;
    let j = inst.with_epsilon(epsilon.clone())?;
    let one_minus = Rat::one() - epsilon;
    let delta = epsilon / &one_minus;
    let j_prime = scale_instance(&j, &one_minus)?;

    let slf = simulate(&j, Policy::Slf, &Rat::one(), &IntervalSet::empty())?;
    let forbidden = known_intervals(&slf)?;
    let fast = simulate(
        &j,
        Policy::Setf,
        &(Rat::one() + &delta),
        &IntervalSet::empty(),
    )?;
    let scaled = simulate(&j_prime, Policy::Setf, &Rat::one(), &IntervalSet::empty())?;
    let setfi = simulate(&j_prime, Policy::Setf, &Rat::one(), &forbidden)?;
    let times = union_times(&[&slf, &fast, &scaled, &setfi]);

    let rows: Vec<ChainRow> = times
        .iter()
        .map(|t| ChainRow {
            t: t.clone(),
            setf_fast: fast.active_count(t),
            setf_scaled: scaled.active_count(t),
            setfi: setfi.active_count(t),
            slf: slf.active_count(t),
        })
        .collect();
    let first_row = |pred: fn(&ChainRow) -> bool, what: &str| {
        rows.iter().find(|r| !pred(r)).map(|r| {
            (
                r.t.clone(),
                format!(
                    "{what} fails: setf_fast={}, setf_scaled={}, setfi={}, slf={}",
                    r.setf_fast, r.setf_scaled, r.setfi, r.slf
                ),
            )
        })
    };

    let mut links = Vec::new();

    let identity = identity_failure(&fast, &scaled);
    links.push(Link::new("scale_identity", identity));
    links.push(Link::new(
        "scaled_counts",
        first_row(|r| r.setf_fast == r.setf_scaled, "|SETF_J,1+δ| = |SETF_J′|"),
    ));

    let (elapsed_violation, count_violation) = compare_setfi(&scaled, &setfi, &times);
    let dominance = match (elapsed_violation, count_violation) {
        (Some((t, id, a, b)), _) => Some((t, format!("job {id}: SETFI at {a}, SETF at {b}"))),
        (None, Some((t, a, b))) => Some((t, format!("|SETF_J′| = {a} > |SETFI| = {b}"))),
        (None, None) => None,
    };
    links.push(Link::new("setfi_dominance", dominance));

    links.push(Link::new(
        "setfi_mirrors_slf",
        mirror_failure(&setfi, &slf, &one_minus, &times),
    ));
    links.push(Link::new(
        "setfi_below_slf",
        first_row(|r| r.setfi <= r.slf, "|SETFI_J′,I| ≤ |SLF_J|"),
    ));
    links.push(Link::new(
        "chain",
        first_row(|r| r.setf_fast <= r.slf, "|SETF_J,1+δ| ≤ |SLF_J|"),
    ));

    Ok(ReductionReport {
        epsilon: epsilon.clone(),
        delta,
        forbidden: forbidden.intervals().to_vec(),
        holds: links.iter().all(|l| l.holds),
        links,
        rows,
    })
}

fn identity_failure(fast: &Schedule, scaled: &Schedule) -> Option<(Rat, String)> {
    let (a, b) = (served_trace(fast), served_trace(scaled));
    if let Some(((s, _, ids_a), (_, _, ids_b))) = a
        .iter()
        .zip(&b)
        .find(|((s1, e1, i1), (s2, e2, i2))| s1 != s2 || e1 != e2 || i1 != i2)
    {
        return Some((
            s.clone(),
            format!("segments differ: {ids_a:?} against {ids_b:?}"),
        ));
    }
    if a.len() != b.len() {
        let t = a.get(b.len()).or(b.get(a.len())).map(|s| s.0.clone());
        return Some((
            t.unwrap_or_else(Rat::zero),
            format!("{} segments against {}", a.len(), b.len()),
        ));
    }
    fast.completions
        .iter()
        .find(|(id, c)| scaled.completions.get(id) != Some(c))
        .map(|(id, c)| {
            (
                c.clone(),
                format!(
                    "job {id} completes at {c} against {:?}",
                    scaled.completions.get(id).map(Rat::to_string)
                ),
            )
        })
}

fn mirror_failure(
    setfi: &Schedule,
    slf: &Schedule,
    one_minus: &Rat,
    times: &[Rat],
) -> Option<(Rat, String)> {
    let mirror = elapsed_profile(setfi, times);
    let original = elapsed_profile(slf, times);
    times
        .iter()
        .zip(mirror.iter().zip(&original))
        .find_map(|(t, (m, o))| {
            m.iter().find_map(|(id, e)| {
                let p = slf.jobs[id].size.as_ref().expect("sizes are declared");
                let cap = one_minus * p;
                let want = Rat::min_of(&o[id], &cap);
                (e != want).then(|| {
                    (
                        t.clone(),
                        format!("job {id}: SETFI at {e}, SLF-derived level {want}"),
                    )
                })
            })
        })
}

/// Outcome of [`speed_corollary_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorollaryReport {
    /// Clairvoyance parameter defining the speed and the bound.
    pub epsilon: Rat,
    /// `1 + ⌈1/ε⌉`.
    pub bound: usize,
    /// Number of event times checked.
    pub checked_times: usize,
    /// Largest `|SETF(t)| / |SRPT(t)|` seen (1 when both are always empty).
    pub worst_ratio: Rat,
    /// First `(t, |SETF(t)|, |SRPT(t)|)` exceeding the bound.
    pub violation: Option<(Rat, usize, usize)>,
    /// `true` if the bound holds at every event time.
    pub holds: bool,
}

/// Checks `|SETF_{1+ε}(t)| ≤ (1 + ⌈1/ε⌉)·|SRPT(t)|` at every event time of
/// both schedules, SETF running with speed `1 + ε` and SRPT at unit speed.
///
/// ```
/// use eclair_core::{Instance, Rat};
/// use eclair_reduction::speed_corollary_check;
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let report = speed_corollary_check(&toy, &Rat::new(1, 2)).unwrap();
/// assert_eq!(report.bound, 3);
/// assert!(report.holds);
/// ```
pub fn speed_corollary_check(
    inst: &Instance,
    epsilon: &Rat,
) -> Result<CorollaryReport, ReductionError> {
    require_open_epsilon(epsilon)?;
    require_declared(inst)?;
    let setf = simulate(
        inst,
        Policy::Setf,
        &(Rat::one() + epsilon),
        &IntervalSet::empty(),
    )?;
    let srpt = simulate(inst, Policy::Srpt, &Rat::one(), &IntervalSet::empty())?;
    let times = union_times(&[&setf, &srpt]);
    let bound = 1 + ceil_inv(epsilon) as usize;
    let mut worst = Rat::one();
    let mut violation = None;
    for t in &times {
        let (a, b) = (setf.active_count(t), srpt.active_count(t));
        if b > 0 {
            let r = Rat::from(a) / Rat::from(b);
            if r > worst {
                worst = r;
            }
        }
        if a > bound * b && violation.is_none() {
            violation = Some((t.clone(), a, b));
        }
    }
    Ok(CorollaryReport {
        epsilon: epsilon.clone(),
        bound,
        checked_times: times.len(),
        worst_ratio: worst,
        holds: violation.is_none(),
        violation,
    })
}
