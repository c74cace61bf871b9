//! Objectives and comparisons on simulated schedules.
//!
//! Active-job counts are right-continuous step functions whose steps occur at
//! event times only, so every comparison below is exact when evaluated at the
//! union of both schedules' event times.

use std::collections::BTreeSet;
use std::io::Write;

use eclair_core::Rat;
use eclair_sim::Schedule;
use serde::Serialize;

/// Errors raised by metric computations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    /// A job never completed.
    #[error("job {0} did not complete")]
    Incomplete(u64),
    /// The reference flow time is zero.
    #[error("reference flow time is zero")]
    ZeroReference,
}

/// Total flow time `Σ (C_j − q_j)`.
///
/// ```
/// use eclair_core::{Instance, Rat};
/// use eclair_metrics::total_flow_time;
/// use eclair_sim::{simulate, IntervalSet, Policy};
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let srpt = simulate(&toy, Policy::Srpt, &Rat::one(), &IntervalSet::empty()).unwrap();
/// assert_eq!(total_flow_time(&srpt).unwrap(), Rat::int(50));
/// ```
pub fn total_flow_time(sched: &Schedule) -> Result<Rat, MetricsError> {
    let mut total = Rat::zero();
    for (id, info) in &sched.jobs {
        let c = sched.completion(*id).ok_or(MetricsError::Incomplete(*id))?;
        total += c - &info.release.time;
    }
    Ok(total)
}

/// `∫ |A(t)| dt`, integrated from the piecewise-constant count profile. Equal
/// to the total flow time for complete schedules.
pub fn flow_integral(sched: &Schedule) -> Rat {
    let profile = count_profile(sched);
    profile
        .windows(2)
        .map(|w| (&w[1].0 - &w[0].0) * Rat::from(w[0].1))
        .sum()
}

/// Breakpoints `(t, |A(t)|)` of the right-continuous active-count function.
pub fn count_profile(sched: &Schedule) -> Vec<(Rat, usize)> {
    sched
        .event_times()
        .into_iter()
        .map(|t| {
            let n = sched.active_count(&t);
            (t, n)
        })
        .collect()
}

/// `δ(t, θ)`: active jobs at `t` whose remaining work is at least `θ`.
/// Undeclared jobs count as having unbounded remaining work.
pub fn delta_at(sched: &Schedule, t: &Rat, threshold: &Rat) -> usize {
    sched
        .state_at(t)
        .values()
        .filter(|st| st.remaining().is_none_or(|r| r >= *threshold))
        .count()
}

/// Breakpoints `(t, n)` of the thresholded count: `n` is the value of
/// `δ(·, θ)` on `[t, t')` up to the next breakpoint `t'` (the last entry holds
/// from `t` on). Besides event times the breakpoints include the instants at
/// which a job's remaining work drops to `θ`.
pub fn delta_profile(sched: &Schedule, threshold: &Rat) -> Vec<(Rat, usize)> {
    let mut times: BTreeSet<Rat> = sched.event_times().into_iter().collect();
    for seg in &sched.segments {
        let start_state = sched.state_at(&seg.start);
        for (id, rate) in seg.alloc.iter() {
            let Some(r) = start_state.get(&id).and_then(|st| st.remaining()) else {
                continue;
            };
            if r > *threshold {
                let cross = &seg.start + (&r - threshold) / rate;
                if cross < seg.end {
                    times.insert(cross);
                }
            }
        }
    }
    let times: Vec<Rat> = times.into_iter().collect();
    let two = Rat::int(2);
    (0..times.len())
        .map(|i| {
            // Between breakpoints the count is constant; sampling the middle
            // avoids the single instant at which a job sits exactly on θ.
            let probe = match times.get(i + 1) {
                Some(next) => (&times[i] + next) / &two,
                None => times[i].clone(),
            };
            (times[i].clone(), delta_at(sched, &probe, threshold))
        })
        .collect()
}

/// One row of a competitiveness table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountRow {
    /// Event time.
    pub t: Rat,
    /// `|ALG(t)|`.
    pub alg: usize,
    /// `|OPT(t)|`.
    pub opt: usize,
}

/// Result of a local competitiveness check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompetitivenessReport {
    /// The ratio checked.
    pub rho: Rat,
    /// `max |ALG(t)|/|OPT(t)|` over event times with `|OPT(t)| > 0`.
    pub max_count_ratio: Rat,
    /// First violating time if the check fails, otherwise the first time the
    /// maximum ratio is attained.
    pub witness_time: Rat,
    /// `|ALG(t)| ≤ ρ·|OPT(t)|` at every event time.
    pub pass: bool,
    /// Counts at every event time of either schedule.
    pub table: Vec<CountRow>,
}

/// Checks `|ALG(t)| ≤ ρ·|OPT(t)|` at every event time of both schedules.
///
/// ```
/// use eclair_core::{Instance, Rat};
/// use eclair_metrics::local_competitiveness;
/// use eclair_sim::{simulate, IntervalSet, Policy};
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let none = IntervalSet::empty();
/// let slf = simulate(&toy, Policy::Slf, &Rat::one(), &none).unwrap();
/// let srpt = simulate(&toy, Policy::Srpt, &Rat::one(), &none).unwrap();
/// let report = local_competitiveness(&slf, &srpt, &Rat::int(2));
/// assert!(report.pass);
/// ```
pub fn local_competitiveness(alg: &Schedule, opt: &Schedule, rho: &Rat) -> CompetitivenessReport {
    let times: BTreeSet<Rat> = alg
        .event_times()
        .into_iter()
        .chain(opt.event_times())
        .collect();
    let mut table = Vec::with_capacity(times.len());
    let mut max_ratio = Rat::zero();
    let mut best_time: Option<Rat> = None;
    let mut violation: Option<Rat> = None;
    for t in times {
        let a = alg.active_count(&t);
        let o = opt.active_count(&t);
        if Rat::from(a) > rho * Rat::from(o) && violation.is_none() {
            violation = Some(t.clone());
        }
        if o > 0 {
            let ratio = Rat::from(a) / Rat::from(o);
            if best_time.is_none() || ratio > max_ratio {
                max_ratio = ratio;
                best_time = Some(t.clone());
            }
        }
        table.push(CountRow { t, alg: a, opt: o });
    }
    CompetitivenessReport {
        rho: rho.clone(),
        max_count_ratio: max_ratio,
        pass: violation.is_none(),
        witness_time: violation.or(best_time).unwrap_or_else(Rat::zero),
        table,
    }
}

/// `flow(ALG) / flow(OPT)`.
pub fn competitive_ratio(alg: &Schedule, opt: &Schedule) -> Result<Rat, MetricsError> {
    let fa = total_flow_time(alg)?;
    let fo = total_flow_time(opt)?;
    if fo.is_zero() {
        return Err(MetricsError::ZeroReference);
    }
    Ok(fa / fo)
}

/// The metrics document written by the command-line tools.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MetricsDoc {
    /// Flow time of the algorithm.
    pub flow_alg: Rat,
    /// Flow time of the reference (SRPT).
    pub flow_opt: Rat,
    /// Their ratio (`1` for the empty instance).
    pub ratio: Rat,
    /// Outcome of the local check.
    pub local_ok: bool,
    /// First violating time, if any.
    pub witness: Option<Rat>,
}

impl MetricsDoc {
    /// Builds the document from two complete schedules and a ratio to check.
    pub fn build(alg: &Schedule, opt: &Schedule, rho: &Rat) -> Result<MetricsDoc, MetricsError> {
        let flow_alg = total_flow_time(alg)?;
        let flow_opt = total_flow_time(opt)?;
        let ratio = if flow_opt.is_zero() {
            Rat::one()
        } else {
            &flow_alg / &flow_opt
        };
        let report = local_competitiveness(alg, opt, rho);
        Ok(MetricsDoc {
            flow_alg,
            flow_opt,
            ratio,
            local_ok: report.pass,
            witness: (!report.pass).then_some(report.witness_time),
        })
    }
}

/// Writes a report's table as CSV `t,count_alg,count_opt`.
pub fn write_counts_csv<W: Write>(
    report: &CompetitivenessReport,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "count_alg", "count_opt"])?;
    for row in &report.table {
        w.write_record([row.t.to_string(), row.alg.to_string(), row.opt.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
