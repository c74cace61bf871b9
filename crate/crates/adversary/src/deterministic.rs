//! The adaptive round adversary against deterministic policies.

use std::collections::BTreeMap;

use eclair_core::{ceil_inv, Instance, Job, JobId, Rat};
use eclair_metrics::total_flow_time;
use eclair_sim::{simulate, IntervalSet, Policy, Simulator};
use serde::Serialize;
use serde_json::json;

use crate::AdversaryError;

/// What happened in one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    /// Round index `c`, starting at 1.
    pub round: usize,
    /// Start of the round, `t_c`, where the batch is released.
    pub t_c: Rat,
    /// Smallest remaining time among the policy's older jobs at `t_c`
    /// (absent in round one).
    pub r_star: Option<Rat>,
    /// Work quota `γ` that ends the observation phase (the scale in round
    /// one).
    pub quota: Rat,
    /// First time a tracked job received `γ` units within the round, `t′_c`.
    pub t_prime: Rat,
    /// The job that reached the quota first (lowest id on simultaneous
    /// crossings).
    pub trigger: JobId,
    /// Sizes declared at `t′_c` for the round's batch.
    pub declared: Vec<(JobId, Rat)>,
    /// Batch job with the largest remaining time at `t′_c`.
    pub j_max: JobId,
    /// Batch job other than `j_max` with the smallest remaining time.
    pub j_min: JobId,
    /// `r(J_c ∖ {j_max})`.
    pub claim_lhs: Rat,
    /// `γ + r_{j_min}`.
    pub claim_rhs: Rat,
    /// When the comparator has finished every batch job but `j_max`, `t″_c`.
    pub t_double_prime: Rat,
    /// End of the round: `max(t′_c, t″_c)`.
    pub end: Rat,
    /// Active jobs of the policy at the end of the round.
    pub delta_alg: usize,
    /// Active jobs of the comparator at the end of the round.
    pub delta_smart: usize,
}

/// Outcome of [`deterministic_lb_run`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdversaryTranscript {
    /// The policy played against.
    pub policy: String,
    /// Clairvoyance parameter.
    pub epsilon: Rat,
    /// Batch size `⌈1/ε⌉`.
    pub batch: usize,
    /// Round-one work quota. Every later quantity is proportional to it; it
    /// is chosen so that the policy's jobs all have at least one unit of
    /// work left when the tail starts.
    pub scale: Rat,
    /// One record per round.
    pub rounds: Vec<RoundRecord>,
    /// Number of unit jobs in the tail.
    pub tail: u64,
    /// Time at which the tail starts (the end of the last round).
    pub tail_start: Rat,
    /// The final instance with every size declared, tail included.
    #[serde(skip)]
    pub instance: Instance,
    /// Total flow time of the policy.
    pub flow_alg: Rat,
    /// Total flow time of the comparator schedule built by the adversary.
    pub flow_smart: Rat,
    /// Total flow time of SRPT, the optimum, on the final instance.
    pub flow_opt: Rat,
    /// `flow_alg / flow_smart` (1 on an empty instance).
    pub ratio: Rat,
    /// `flow_alg / flow_opt` (1 on an empty instance).
    pub ratio_opt: Rat,
    /// `(δ_alg + 1)/(δ_smart + 1)` at the end of the last round: the value
    /// the flow ratio approaches as the tail grows.
    pub limit_ratio: Rat,
}

impl AdversaryTranscript {
    /// The transcript as one JSON document (instance excluded).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("transcript serialises")
    }

    /// One JSON line per round.
    pub fn rounds_jsonl(&self) -> String {
        self.rounds
            .iter()
            .map(|r| serde_json::to_string(r).expect("round serialises") + "\n")
            .collect()
    }
}

/// Adds `m` unit jobs released at `start, start + 1, …, start + m − 1` with
/// fresh ids above every existing id.
///
/// ```
/// use eclair_adversary::append_unit_tail;
/// use eclair_core::{Instance, Rat};
///
/// let inst = Instance::simultaneous(Rat::new(1, 2), &[3]);
/// let tailed = append_unit_tail(&inst, &Rat::new(1, 2), 2).unwrap();
/// assert_eq!(tailed.jobs.len(), 3);
/// assert_eq!(tailed.job(3).unwrap().release.time, Rat::new(3, 2));
/// ```
pub fn append_unit_tail(inst: &Instance, start: &Rat, m: u64) -> Result<Instance, AdversaryError> {
    let first = inst.jobs.iter().map(|j| j.id).max().unwrap_or(0) + 1;
    let mut jobs = inst.jobs.clone();
    jobs.extend(tail_jobs(first, start, m));
    let mut out = Instance::new(inst.epsilon.clone(), jobs)?;
    out.meta = inst.meta.clone();
    Ok(out)
}

fn tail_jobs(first: JobId, start: &Rat, m: u64) -> impl Iterator<Item = Job> + '_ {
    (0..m).map(move |i| Job::new(first + i, start + Rat::from(i), Rat::one()))
}

/// Plays the round adversary for `rounds` rounds against `policy`, then
/// appends `tail` unit jobs at consecutive integer offsets from the end of
/// the last round.
///
/// Round `c` releases `⌈1/ε⌉` undeclared jobs at `t_c` and runs the policy
/// until some job (old or new) has received the round's quota `γ` of work
/// since `t_c`. Touched batch jobs are then declared so that they become
/// known at once (`p = e/(1−ε)`), untouched ones get `ε·γ/(1−ε)`. The
/// comparator spends the round finishing every batch job except the one with
/// the largest remaining time, so after `c` rounds it holds `c` jobs while
/// the policy holds all `c·⌈1/ε⌉`. Each round's inequalities are checked
/// exactly and reported as [`AdversaryError::Claim`] if they fail.
///
/// ```
/// use eclair_adversary::deterministic_lb_run;
/// use eclair_core::Rat;
/// use eclair_sim::Policy;
///
/// let run = deterministic_lb_run(Policy::Slf, &Rat::new(1, 2), 1, 0).unwrap();
/// let round = &run.rounds[0];
/// assert_eq!(round.t_prime, Rat::int(2));
/// assert_eq!(round.declared, vec![(1, Rat::int(2)), (2, Rat::int(2))]);
/// assert_eq!((round.delta_alg, round.delta_smart), (2, 1));
/// ```
pub fn deterministic_lb_run(
    policy: Policy,
    epsilon: &Rat,
    rounds: usize,
    tail: u64,
) -> Result<AdversaryTranscript, AdversaryError> {
    if !epsilon.is_positive() || *epsilon >= Rat::one() {
        return Err(AdversaryError::Input(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if policy.needs_sizes() {
        return Err(AdversaryError::Input(format!(
            "{policy} reads sizes of unknown jobs and cannot face an adaptive adversary"
        )));
    }
    // The policy is deterministic, so the adversary can rehearse it: a first
    // pass at unit scale measures the smallest remaining time left at the
    // end, and the real pass scales the round-one quota so that every job the
    // policy still holds has at least one unit of work left when the tail
    // starts.
    let rehearsal = play(policy, epsilon, rounds, &Rat::one())?;
    let scale = match rehearsal.min_remaining() {
        Some(r) if r < Rat::one() => r.recip(),
        _ => Rat::one(),
    };
    let Played {
        mut sim,
        batch,
        sizes,
        mut held,
        mut smart_flow,
        records,
        next_id,
        end: t_c,
    } = play(policy, epsilon, rounds, &scale)?;
    if let Some(r) = sim.states().iter().filter_map(|st| st.remaining()).min() {
        if r < Rat::one() {
            return Err(AdversaryError::Claim {
                round: rounds,
                claim: "tail_threshold".into(),
                lhs: Box::new(r),
                rhs: Box::new(Rat::one()),
            });
        }
    }

    // Tail: the comparator runs each unit job on arrival, then the held jobs
    // shortest first.
    let tail_start = t_c;
    for job in tail_jobs(next_id, &tail_start, tail) {
        sim.add_job(job)?;
    }
    smart_flow += Rat::from(tail);
    let mut clock = &tail_start + Rat::from(tail);
    held.sort_by(|a, b| a.2.cmp(&b.2).then(a.0.cmp(&b.0)));
    for (_, release, p) in &held {
        clock += p;
        smart_flow += &clock - release;
    }

    let sched = sim.finish()?;
    let flow_alg = total_flow_time(&sched)?;
    let mut jobs: Vec<Job> = sizes
        .into_iter()
        .map(|(id, (q, p))| Job::new(id, q, p))
        .collect();
    jobs.extend(tail_jobs(next_id, &tail_start, tail));
    let mut instance = Instance::new(epsilon.clone(), jobs)?;
    instance.meta = Some(json!({
        "kind": "deterministic",
        "policy": policy.to_string(),
        "epsilon": epsilon.to_string(),
        "rounds": rounds,
        "tail": tail,
    }));
    let opt = simulate(&instance, Policy::Srpt, &Rat::one(), &IntervalSet::empty())?;
    let flow_opt = total_flow_time(&opt)?;
    let ratio_of = |a: &Rat, b: &Rat| if b.is_zero() { Rat::one() } else { a / b };
    let (last_alg, last_smart) = records
        .last()
        .map_or((0, 0), |r| (r.delta_alg, r.delta_smart));
    Ok(AdversaryTranscript {
        policy: policy.to_string(),
        epsilon: epsilon.clone(),
        batch,
        scale,
        rounds: records,
        tail,
        tail_start,
        instance,
        ratio: ratio_of(&flow_alg, &smart_flow),
        ratio_opt: ratio_of(&flow_alg, &flow_opt),
        flow_alg,
        flow_smart: smart_flow,
        flow_opt,
        limit_ratio: Rat::from(last_alg + 1) / Rat::from(last_smart + 1),
    })
}

/// State after the rounds have been played.
struct Played {
    sim: Simulator,
    batch: usize,
    sizes: BTreeMap<JobId, (Rat, Rat)>,
    held: Vec<(JobId, Rat, Rat)>,
    smart_flow: Rat,
    records: Vec<RoundRecord>,
    next_id: JobId,
    end: Rat,
}

impl Played {
    /// Smallest remaining time among the policy's active jobs.
    fn min_remaining(&self) -> Option<Rat> {
        self.sim
            .states()
            .iter()
            .filter_map(|st| st.remaining())
            .min()
    }
}

fn play(
    policy: Policy,
    epsilon: &Rat,
    rounds: usize,
    unit: &Rat,
) -> Result<Played, AdversaryError> {
    let batch = ceil_inv(epsilon) as usize;
    let one_minus = Rat::one() - epsilon;
    let lift = epsilon / &one_minus;
    let k = Rat::from(batch - 1);

    let mut sim = Simulator::new(epsilon.clone(), policy, Rat::one());
    let mut sizes: BTreeMap<JobId, (Rat, Rat)> = BTreeMap::new();
    let mut smart_flow = Rat::zero();
    let mut held: Vec<(JobId, Rat, Rat)> = Vec::new();
    let mut records = Vec::new();
    let mut t_c = Rat::zero();
    let mut next_id: JobId = 1;

    for c in 1..=rounds {
        let claim = |name: &str, ok: bool, lhs: &Rat, rhs: &Rat| {
            if ok {
                Ok(())
            } else {
                Err(AdversaryError::Claim {
                    round: c,
                    claim: name.into(),
                    lhs: Box::new(lhs.clone()),
                    rhs: Box::new(rhs.clone()),
                })
            }
        };
        let old: Vec<(JobId, Rat)> = sim
            .states()
            .into_iter()
            .map(|st| {
                let r = st.remaining().expect("older jobs are declared");
                (st.id, r)
            })
            .collect();
        let r_star = old.iter().map(|(_, r)| r.clone()).min();
        let quota = match &r_star {
            None => unit.clone(),
            Some(r) => r / (&k + Rat::one()) / &lift,
        };
        if let Some(r) = &r_star {
            claim("quota_below_r_star", quota < *r, &quota, r)?;
        }

        let ids: Vec<JobId> = (next_id..next_id + batch as JobId).collect();
        next_id += batch as JobId;
        for id in &ids {
            sim.add_job(Job::undeclared(*id, t_c.clone()))?;
        }
        let watches: Vec<(JobId, Rat)> = old
            .iter()
            .map(|(id, _)| (*id, sim.elapsed(*id).expect("old job exists") + &quota))
            .chain(ids.iter().map(|id| (*id, quota.clone())))
            .collect();
        let fired = sim
            .run_until_watch(&watches, None)?
            .ok_or_else(|| AdversaryError::Input("the policy stopped working".into()))?;
        let t_prime = sim.now().clone();
        let trigger = *fired.iter().min().expect("a watch fired");

        let floor = &lift * &quota;
        let mut declared = Vec::new();
        let mut remaining: BTreeMap<JobId, Rat> = BTreeMap::new();
        for id in &ids {
            let e = sim.elapsed(*id).expect("batch job exists");
            let p = if e.is_positive() {
                &e / &one_minus
            } else {
                floor.clone()
            };
            sim.declare(*id, p.clone())?;
            remaining.insert(*id, &p - &e);
            sizes.insert(*id, (t_c.clone(), p.clone()));
            declared.push((*id, p));
        }

        let r_max = remaining
            .values()
            .max()
            .expect("batch is non-empty")
            .clone();
        let j_max = if remaining.get(&trigger) == Some(&r_max) {
            trigger
        } else {
            *remaining
                .iter()
                .find(|(_, r)| **r == r_max)
                .expect("maximum exists")
                .0
        };
        let (j_min, r_min) = remaining
            .iter()
            .filter(|(id, _)| **id != j_max)
            .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
            .map(|(id, r)| (*id, r.clone()))
            .expect("batches have at least two jobs");
        claim("j_max_bounded", r_max <= floor, &r_max, &floor)?;
        for st in sim.states() {
            let r = st.remaining().expect("every active job is declared now");
            claim("j_min_smallest", r_min <= r, &r_min, &r)?;
        }
        let claim_lhs: Rat = remaining
            .iter()
            .filter(|(id, _)| **id != j_max)
            .map(|(_, r)| r.clone())
            .sum();
        let claim_rhs = &quota + &r_min;
        claim(
            "round_inequality",
            claim_lhs < claim_rhs,
            &claim_lhs,
            &claim_rhs,
        )?;

        // The comparator runs the batch minus j_max back to back from t_c,
        // shortest first.
        let mut order: Vec<(Rat, JobId)> = declared
            .iter()
            .filter(|(id, _)| *id != j_max)
            .map(|(id, p)| (p.clone(), *id))
            .collect();
        order.sort();
        let mut clock = t_c.clone();
        for (p, _) in &order {
            clock += p;
            smart_flow += &clock - &t_c;
        }
        let t_double_prime = clock;
        held.push((j_max, t_c.clone(), sizes[&j_max].1.clone()));
        let end = Rat::max_of(&t_prime, &t_double_prime).clone();
        let first_done = &t_prime + &r_min;
        claim("alg_still_busy", end < first_done, &end, &first_done)?;
        sim.run_until(&end)?;

        let delta_alg = sim.states().len();
        let delta_smart = held.len();
        let (want_alg, want_smart) = (Rat::from(c * batch), Rat::from(c));
        claim(
            "alg_count",
            Rat::from(delta_alg) == want_alg,
            &Rat::from(delta_alg),
            &want_alg,
        )?;
        claim(
            "smart_count",
            Rat::from(delta_smart) == want_smart,
            &Rat::from(delta_smart),
            &want_smart,
        )?;

        records.push(RoundRecord {
            round: c,
            t_c: t_c.clone(),
            r_star,
            quota,
            t_prime,
            trigger,
            declared,
            j_max,
            j_min,
            claim_lhs,
            claim_rhs,
            t_double_prime,
            end: end.clone(),
            delta_alg,
            delta_smart,
        });
        t_c = end;
    }

    Ok(Played {
        sim,
        batch,
        sizes,
        held,
        smart_flow,
        records,
        next_id,
        end: t_c,
    })
}
