//! Accounting of the work SLF and SRPT perform while fast-forwarding from `s`
//! to `ℓ` over a batch of new jobs.

use std::collections::{BTreeMap, BTreeSet};

use eclair_core::{Instance, JobId, Rat};
use eclair_sim::{Policy, Schedule};
use serde::Serialize;

use crate::state::{
    before, check_input, known_ids, leader_of, released_by, remaining, run, unknown_ids,
};
use crate::CertifierError;

/// How the work of `(s, ℓ]` splits between the batch `J_new` released at
/// `s` and the older jobs, for SLF and for SRPT.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorkSplit {
    /// Batch release time.
    pub s: Rat,
    /// End of the fast-forward interval.
    pub ell: Rat,
    /// The largest job of the batch (lowest id among equals).
    pub leader: JobId,
    /// `γ`, the leader's elapsed time under SLF at `ℓ`.
    pub gamma: Rat,
    /// `Δ(i) = min(e_i(ℓ), e*_i(ℓ))`, the work both schedules did on `i`.
    pub delta: BTreeMap<JobId, Rat>,
    /// `τ(i) = max(e_i(ℓ) − e*_i(ℓ), 0)`, extra SLF work on `i`.
    pub tau: BTreeMap<JobId, Rat>,
    /// `τ*(i) = max(e*_i(ℓ) − e_i(ℓ), 0)`, extra SRPT work on `i`.
    pub tau_star: BTreeMap<JobId, Rat>,
    /// SLF work on old jobs during `(s, ℓ]`.
    pub nu: Rat,
    /// SRPT work on old jobs during `(s, ℓ]`.
    pub nu_star: Rat,
    /// Batch jobs still active under SRPT at `ℓ`.
    pub o_ell: BTreeSet<JobId>,
    /// Batch jobs still active under SLF at `ℓ`.
    pub a_ell: BTreeSet<JobId>,
    /// `{j ∈ O_ℓ : τ(j) > 0}`.
    pub o_plus: BTreeSet<JobId>,
    /// `{j ∈ A_ℓ : τ*(j) > 0}`.
    pub a_plus: BTreeSet<JobId>,
    /// `{j : τ(j) = τ*(j) = 0}`.
    pub d_ell: BTreeSet<JobId>,
    /// Old jobs known to SLF at `s`.
    pub known_s: BTreeSet<JobId>,
    /// Old jobs unknown to SLF at `s`.
    pub unknown_s: BTreeSet<JobId>,
    /// Old jobs known to SLF and still active at `ℓ`.
    pub known_ell: BTreeSet<JobId>,
    /// The job SRPT processes right before `ℓ`, if any.
    pub z: Option<JobId>,
    /// Sizes of the batch jobs.
    pub sizes: BTreeMap<JobId, Rat>,
    /// SLF remaining work of the old jobs at `s`.
    pub old_remaining: BTreeMap<JobId, Rat>,
    /// SRPT remaining work of the old jobs at `s`.
    pub old_remaining_star: BTreeMap<JobId, Rat>,
    /// SLF remaining work at `ℓ` of every job released by `s`.
    pub remaining_ell: BTreeMap<JobId, Rat>,
    /// SRPT remaining work at `ℓ` of every job released by `s`.
    pub remaining_ell_star: BTreeMap<JobId, Rat>,
    /// `ε`.
    pub epsilon: Rat,
}

impl WorkSplit {
    /// `Σ_{i ∈ J_new} Δ(i)`.
    pub fn delta_total(&self) -> Rat {
        self.delta.values().sum()
    }

    /// `τ(J_new)`.
    pub fn tau_total(&self) -> Rat {
        self.tau.values().sum()
    }

    /// `τ*(J_new)`.
    pub fn tau_star_total(&self) -> Rat {
        self.tau_star.values().sum()
    }

    /// The batch `J_new`.
    pub fn batch(&self) -> BTreeSet<JobId> {
        self.sizes.keys().copied().collect()
    }
}

/// Computes the work split of the batch `j_new` (released at `s`) over
/// `(s, ℓ]`, simulating SLF and SRPT on `inst`.
///
/// Every precondition of the fast-forward step is verified rather than
/// assumed: during `(s, ℓ]` SLF only touches batch jobs and jobs known at
/// `s`, nothing is released, and the leader is touched and not yet past its
/// knowledge threshold at `ℓ`. The identities relating `Δ`, `τ`, `τ*`, `ν`,
/// `ν*` to the actual work, the SLF state invariants at `ℓ` and the per-job case
/// table are checked as well.
///
/// ```
/// use eclair_certifier::compute_work_split;
/// use eclair_core::{Instance, Rat};
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let ws = compute_work_split(&toy, &Rat::zero(), &Rat::int(9), &(1..=6).collect()).unwrap();
/// assert_eq!(ws.gamma, Rat::new(3, 2));
/// assert_eq!(ws.nu, Rat::zero());
/// ```
pub fn compute_work_split(
    inst: &Instance,
    s: &Rat,
    ell: &Rat,
    j_new: &BTreeSet<JobId>,
) -> Result<WorkSplit, CertifierError> {
    check_input(inst)?;
    if inst.epsilon == Rat::one() {
        return Err(CertifierError::Input(
            "the work split needs epsilon < 1".into(),
        ));
    }
    let slf = run(inst, Policy::Slf, ell)?;
    let opt = run(inst, Policy::Srpt, ell)?;
    work_split(inst, &slf, &opt, s, ell, j_new)
}

/// [`compute_work_split`] on schedules simulated at least up to `ℓ`.
pub(crate) fn work_split(
    inst: &Instance,
    slf: &Schedule,
    opt: &Schedule,
    s: &Rat,
    ell: &Rat,
    j_new: &BTreeSet<JobId>,
) -> Result<WorkSplit, CertifierError> {
    if s > ell {
        return Err(CertifierError::Input(format!(
            "empty interval ({s}, {ell}]"
        )));
    }
    for id in j_new {
        match inst.job(*id) {
            Some(j) if j.release.time == *s => {}
            _ => {
                return Err(CertifierError::Input(format!(
                    "job {id} is not part of a batch released at {s}"
                )))
            }
        }
    }
    let (leader, p_leader) =
        leader_of(inst, j_new).ok_or_else(|| CertifierError::Input("empty batch".into()))?;
    let eps = inst.epsilon.clone();
    let one_minus = Rat::one() - &eps;
    let ratio = &eps / &one_minus;

    if let Some(j) = inst
        .jobs
        .iter()
        .find(|j| j.release.time > *s && j.release.time < *ell)
    {
        return Err(CertifierError::claim(
            "fast_forward.no_arrivals",
            format!(
                "job {} is released at {} inside ({s}, {ell})",
                j.id, j.release.time
            ),
        ));
    }

    let st_s = before(slf, s);
    let st_s_star = before(opt, s);
    let known_s = known_ids(&st_s);
    let unknown_s = unknown_ids(&st_s);
    let old_remaining = remaining(&st_s);
    let old_remaining_star = remaining(&st_s_star);

    for id in slf.touched_jobs(s, ell) {
        if !j_new.contains(&id) && !known_s.contains(&id) {
            return Err(CertifierError::claim(
                "fast_forward.touched",
                format!("SLF touches job {id} during ({s}, {ell}], which is neither new nor known at {s}"),
            ));
        }
    }

    let e = slf.elapsed_at(ell);
    let e_star = opt.elapsed_at(ell);
    let gamma = e[&leader].clone();
    if ell > s {
        if slf.last_touch(leader, ell).as_ref() != Some(ell) {
            return Err(CertifierError::claim(
                "fast_forward.leader_touched",
                format!("leader {leader} is not touched at {ell}"),
            ));
        }
        if gamma > &one_minus * &p_leader {
            return Err(CertifierError::claim(
                "fast_forward.leader_unknown",
                format!("leader {leader} is past its knowledge threshold at {ell}"),
            ));
        }
    }

    let mut sizes = BTreeMap::new();
    let mut delta = BTreeMap::new();
    let mut tau = BTreeMap::new();
    let mut tau_star = BTreeMap::new();
    for id in j_new {
        let p = inst
            .job(*id)
            .and_then(|j| j.size.clone())
            .expect("checked input");
        let (a, b) = (&e[id], &e_star[id]);
        delta.insert(*id, Rat::min_of(a, b).clone());
        tau.insert(*id, Rat::max_of(&(a - b), &Rat::zero()).clone());
        tau_star.insert(*id, Rat::max_of(&(b - a), &Rat::zero()).clone());
        sizes.insert(*id, p);
    }
    let span = ell - s;
    let delta_total: Rat = delta.values().sum();
    let nu = &span - &delta_total - tau.values().sum::<Rat>();
    let nu_star = &span - &delta_total - tau_star.values().sum::<Rat>();

    let st_ell = released_by(slf, ell, s);
    let st_ell_star = released_by(opt, ell, s);
    let a_ell: BTreeSet<JobId> = j_new
        .iter()
        .copied()
        .filter(|id| st_ell.contains_key(id))
        .collect();
    let o_ell: BTreeSet<JobId> = j_new
        .iter()
        .copied()
        .filter(|id| st_ell_star.contains_key(id))
        .collect();
    let known_ell: BTreeSet<JobId> = st_ell
        .values()
        .filter(|st| st.known && !j_new.contains(&st.id))
        .map(|st| st.id)
        .collect();
    let o_plus: BTreeSet<JobId> = o_ell
        .iter()
        .copied()
        .filter(|id| tau[id].is_positive())
        .collect();
    let a_plus: BTreeSet<JobId> = a_ell
        .iter()
        .copied()
        .filter(|id| tau_star[id].is_positive())
        .collect();
    let d_ell: BTreeSet<JobId> = j_new
        .iter()
        .copied()
        .filter(|id| tau[id].is_zero() && tau_star[id].is_zero())
        .collect();
    if o_plus.len() + a_plus.len() + d_ell.len() != j_new.len()
        || !o_plus.is_disjoint(&a_plus)
        || !o_plus.is_disjoint(&d_ell)
        || !a_plus.is_disjoint(&d_ell)
    {
        return Err(CertifierError::claim(
            "work_split.partition",
            "O+, A+ and D do not partition the batch",
        ));
    }

    // Work actually done on old jobs.
    let old: Vec<JobId> = slf
        .jobs
        .iter()
        .filter(|(_, info)| info.release.time < *s)
        .map(|(id, _)| *id)
        .collect();
    let e_s = slf.elapsed_at(s);
    let e_s_star = opt.elapsed_at(s);
    let work: Rat = old.iter().map(|id| &e[id] - &e_s[id]).sum();
    let work_star: Rat = old.iter().map(|id| &e_star[id] - &e_s_star[id]).sum();
    if work != nu || work_star != nu_star {
        return Err(CertifierError::claim(
            "work_split.identity",
            format!("ν = {nu}, ν* = {nu_star} but old jobs received {work} and {work_star}"),
        ));
    }

    // SLF at ℓ.
    if !known_ell.is_subset(&known_s) {
        return Err(CertifierError::claim(
            "slf_at_ell.known_subset",
            "K(ℓ) ⊄ K(s)",
        ));
    }
    let threshold = &ratio * &gamma;
    for id in &known_s {
        let r = &old_remaining[id];
        if st_ell.contains_key(id) != (*r >= threshold) {
            return Err(CertifierError::claim(
                "slf_at_ell.known_survival",
                format!("known job {id} with r(s) = {r} vs εγ/(1−ε) = {threshold}"),
            ));
        }
    }
    for id in &known_ell {
        if e[id] != e_s[id] {
            return Err(CertifierError::claim(
                "slf_at_ell.known_untouched",
                format!("job {id} of K(ℓ) was processed during ({s}, {ell}]"),
            ));
        }
    }
    let lost: Rat = known_s
        .difference(&known_ell)
        .map(|id| old_remaining[id].clone())
        .sum();
    if lost != nu {
        return Err(CertifierError::claim(
            "work_split.nu_known",
            format!("ν = {nu} but the jobs of K(s)∖K(ℓ) had {lost} remaining"),
        ));
    }
    for id in j_new {
        let ok = if a_ell.contains(id) {
            e[id] == gamma
        } else {
            e[id] <= &gamma / &one_minus
        };
        if !ok {
            return Err(CertifierError::claim(
                "slf_at_ell.batch",
                format!("batch job {id} has elapsed {} with γ = {gamma}", e[id]),
            ));
        }
    }

    // Case table for the batch jobs other than SRPT's last job.
    let z = if ell > s {
        opt.segments
            .iter()
            .take_while(|seg| seg.start < *ell)
            .last()
            .and_then(|seg| seg.alloc.ids().first().copied())
    } else {
        None
    };
    for id in j_new {
        if Some(*id) == z {
            continue;
        }
        let (d, t, ts) = (&delta[id], &tau[id], &tau_star[id]);
        let (in_o, in_a) = (o_ell.contains(id), a_ell.contains(id));
        let ok = match (in_o, in_a) {
            (true, true) => *t == gamma && ts.is_zero() && d.is_zero(),
            (true, false) => *t <= &gamma / &one_minus && ts.is_zero() && d.is_zero(),
            (false, true) => *d == gamma && t.is_zero() && *ts >= threshold,
            (false, false) => *d == sizes[id],
        };
        if !ok {
            return Err(CertifierError::claim(
                "work_split.case_table",
                format!(
                    "job {id} (in O_ℓ: {in_o}, in A_ℓ: {in_a}) has Δ = {d}, τ = {t}, τ* = {ts}"
                ),
            ));
        }
    }

    Ok(WorkSplit {
        s: s.clone(),
        ell: ell.clone(),
        leader,
        gamma,
        delta,
        tau,
        tau_star,
        nu,
        nu_star,
        o_ell,
        a_ell,
        o_plus,
        a_plus,
        d_ell,
        known_s,
        unknown_s,
        known_ell,
        z,
        sizes,
        old_remaining,
        old_remaining_star,
        remaining_ell: remaining(&st_ell),
        remaining_ell_star: remaining(&st_ell_star),
        epsilon: eps,
    })
}
