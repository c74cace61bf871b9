//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! values and the time taken.
//!
//! Criteria 1–5 and 7–9 are gating: if any fails the process exits
//! non-zero. Two criteria are reported but do not gate:
//!
//! * 6 (deterministic adversary): the round counts are checked exactly, but
//!   the flow-ratio threshold ⌈1/ε⌉ − 0.01 is out of reach at five rounds.
//!   With c rounds the ratio tends to (c·⌈1/ε⌉ + 1)/(c + 1) as the tail
//!   grows (c·⌈1/ε⌉ + 1 jobs against c + 1 while the unit jobs arrive). Even
//!   at ε = 1/2 and c = 5 that limit is 11/6 ≈ 1.833 < 1.99. The line
//!   prints each measured ratio next to its limit, and the criterion stays
//!   FAIL.
//! * 10 (randomized trend) is diagnostic by definition.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use eclair_adversary::{deterministic_lb_run, lb_statistics, SamplerParams};
use eclair_assignment::Graph;
use eclair_certifier::{create_valid_assignment, update_valid_assignment, verify_certificate};
use eclair_core::{ceil_inv, Instance, Job, JobId, Rat};
use eclair_metrics::local_competitiveness;
use eclair_reduction::{reduction_check, water_filling_dominance, WaterFillingConfig};
use eclair_sim::{simulate, IntervalSet, Policy, Schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Criterion 1 must finish within this budget.
const WORKED_EXAMPLE_BUDGET: Duration = Duration::from_secs(1);
/// Criterion 6: required flow ratio is ⌈1/ε⌉ minus this.
const ADVERSARY_SLACK: f64 = 0.01;
/// Criterion 6: tail length.
const ADVERSARY_TAIL: u64 = 10_000;
/// Criterion 7: allowed distance of the sample mean from 2 − ε.
const EXP_MEAN_TOLERANCE: f64 = 0.15;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Outcome {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn no_gaps() -> IntervalSet {
    IntervalSet::empty()
}

fn run(inst: &Instance, policy: Policy) -> Schedule {
    simulate(inst, policy, &Rat::one(), &no_gaps()).expect("simulation succeeds")
}

fn toy() -> Instance {
    Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1])
}

/// Random declared instance: 1..=max jobs, releases a/d with a < 13,
/// sizes b/d with 1 ≤ b ≤ 12, d ≤ 4.
fn random_instance(rng: &mut ChaCha8Rng, max: usize, epsilon: Rat) -> Instance {
    let n = rng.random_range(1..=max);
    let jobs = (1..=n as JobId)
        .map(|id| {
            let q = Rat::new(rng.random_range(0..13), rng.random_range(1..=4));
            let p = Rat::new(rng.random_range(1..=12), rng.random_range(1..=4));
            Job::new(id, q, p)
        })
        .collect();
    Instance::new(epsilon, jobs).expect("valid instance")
}

fn instances(seed: u64, count: usize, max: usize, epsilon: &Rat) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_instance(&mut rng, max, epsilon.clone()))
        .collect()
}

fn union_times(a: &Schedule, b: &Schedule) -> Vec<Rat> {
    let set: BTreeSet<Rat> = a.event_times().into_iter().chain(b.event_times()).collect();
    set.into_iter().collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let slf = run(&toy(), Policy::Slf);
    let c6 = slf.completion(6).cloned();
    let c5 = slf.completion(5).cloned();
    let e9 = slf.elapsed_at(&Rat::int(9));
    let elapsed_ok = (1..=4).all(|id| e9[&id] == Rat::new(3, 2));
    let took = start.elapsed();
    let pass = c6 == Some(Rat::new(7, 2))
        && c5 == Some(Rat::int(7))
        && elapsed_ok
        && took < WORKED_EXAMPLE_BUDGET;
    Outcome::new(
        pass,
        format!(
            "C6 = {}, C5 = {}, e_1..4(9) = {:?}, {:.3} s",
            c6.map(|c| c.to_string()).unwrap_or_default(),
            c5.map(|c| c.to_string()).unwrap_or_default(),
            (1..=4).map(|id| e9[&id].to_string()).collect::<Vec<_>>(),
            took.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let batch: BTreeSet<JobId> = (1..=6).collect();
    let out = match update_valid_assignment(
        &toy(),
        &batch,
        &Rat::zero(),
        &Rat::int(9),
        &Graph::empty(),
    ) {
        Ok(out) => out,
        Err(e) => return Outcome::new(false, format!("update failed: {e}")),
    };
    let g = &out.graph;
    // Matching a1–o1 7/2, a2–o2 5/2 and the greedy part a3–o1, a4–o2 of 3/2.
    let want = [
        (1, 1, Rat::new(7, 2)),
        (2, 2, Rat::new(5, 2)),
        (3, 1, Rat::new(3, 2)),
        (4, 2, Rat::new(3, 2)),
    ];
    let edges_ok = want.iter().all(|(a, o, w)| g.weight(*a, *o) == *w) && g.edge_count() == 4;
    let phi = g.prefix_expansion();
    Outcome::new(
        edges_ok && phi == Rat::int(2),
        format!(
            "{} edges as in the reference graph: {edges_ok}, φ = {phi}",
            g.edge_count()
        ),
    )
}

fn criterion_3() -> Outcome {
    let insts = instances(3, 1000, 10, &Rat::one());
    let failures: usize = insts
        .par_iter()
        .map(|inst| {
            let full = inst.with_epsilon(Rat::one()).unwrap();
            let none = inst.with_epsilon(Rat::zero()).unwrap();
            let a = run(&full, Policy::Slf).segments == run(&full, Policy::Srpt).segments;
            let b = run(&none, Policy::Slf).segments == run(&none, Policy::Setf).segments;
            usize::from(!a) + usize::from(!b)
        })
        .sum();
    Outcome::new(
        failures == 0,
        format!("1000 instances, {failures} of 2000 comparisons differ"),
    )
}

fn criterion_4() -> Outcome {
    let epsilons = [
        Rat::new(1, 5),
        Rat::new(1, 4),
        Rat::new(1, 3),
        Rat::new(1, 2),
        Rat::new(2, 3),
        Rat::new(9, 10),
    ];
    let mut parts = Vec::new();
    let mut all = true;
    for (i, eps) in epsilons.iter().enumerate() {
        let rho = Rat::from(ceil_inv(eps));
        let insts = instances(40 + i as u64, 1000, 10, eps);
        let results: Vec<(bool, Rat)> = insts
            .par_iter()
            .map(|inst| {
                let report =
                    local_competitiveness(&run(inst, Policy::Slf), &run(inst, Policy::Srpt), &rho);
                (report.pass, report.max_count_ratio)
            })
            .collect();
        let failed = results.iter().filter(|r| !r.0).count();
        let worst = results.iter().map(|r| r.1.clone()).max().unwrap();
        all &= failed == 0;
        parts.push(format!("ε={eps}: {failed} fail, max ratio {worst}/{rho}"));
    }
    Outcome::new(all, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let epsilons = [
        Rat::new(1, 4),
        Rat::new(1, 3),
        Rat::new(1, 2),
        Rat::new(2, 3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let insts: Vec<Instance> = (0..300)
        .map(|i| random_instance(&mut rng, 12, epsilons[i % epsilons.len()].clone()))
        .collect();
    let results: Vec<(usize, Vec<String>)> = insts
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let times = union_times(&run(inst, Policy::Slf), &run(inst, Policy::Srpt));
            let mut failures = Vec::new();
            for t in &times {
                match create_valid_assignment(inst, t) {
                    Ok(cert) => {
                        let report = verify_certificate(&cert);
                        if !report.pass {
                            failures.push(format!("instance {i} t={t}: verification"));
                        }
                    }
                    Err(e) => failures.push(format!("instance {i} t={t}: {e}")),
                }
            }
            (times.len(), failures)
        })
        .collect();
    let certs: usize = results.iter().map(|r| r.0).sum();
    let failures: Vec<&String> = results.iter().flat_map(|r| &r.1).collect();
    Outcome::new(
        failures.is_empty(),
        format!(
            "300 instances, {certs} certificates, {} failures{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!(" (first: {f})"))
                .unwrap_or_default()
        ),
    )
}

fn criterion_6() -> Outcome {
    let cases: Vec<(Rat, usize)> = [Rat::new(1, 2), Rat::new(1, 3), Rat::new(1, 4)]
        .into_iter()
        .flat_map(|eps| (1..=5).map(move |c| (eps.clone(), c)))
        .collect();
    let results: Vec<Result<(bool, f64, Rat), String>> = cases
        .par_iter()
        .map(|(eps, c)| {
            let run = deterministic_lb_run(Policy::Slf, eps, *c, ADVERSARY_TAIL)
                .map_err(|e| format!("ε={eps} c={c}: {e}"))?;
            let k = ceil_inv(eps) as usize;
            let last = run.rounds.last().expect("at least one round");
            let counts_ok = (last.delta_smart, last.delta_alg) == (*c, c * k);
            Ok((counts_ok, run.ratio_opt.to_f64(), run.limit_ratio))
        })
        .collect();
    let mut counts_ok = true;
    let mut ratios_ok = true;
    let mut parts = Vec::new();
    for ((eps, c), r) in cases.iter().zip(results) {
        match r {
            Ok((counts, ratio, limit)) => {
                let k = ceil_inv(eps) as f64;
                counts_ok &= counts;
                ratios_ok &= ratio >= k - ADVERSARY_SLACK;
                if *c == 5 || !counts {
                    parts.push(format!(
                        "ε={eps} c={c}: ratio {ratio:.4} (limit {limit} ≈ {:.4}, need {:.2})",
                        limit.to_f64(),
                        k - ADVERSARY_SLACK
                    ));
                }
            }
            Err(e) => {
                counts_ok = false;
                parts.push(e);
            }
        }
    }
    Outcome::new(
        counts_ok && ratios_ok,
        format!(
            "counts (c, c·⌈1/ε⌉) exact in all 15 runs: {counts_ok}; ratio ≥ ⌈1/ε⌉−{ADVERSARY_SLACK} with M={ADVERSARY_TAIL}: {ratios_ok}; {}",
            parts.join("; ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut all = true;
    let mut parts = Vec::new();
    for eps in [Rat::new(1, 4), Rat::new(1, 2), Rat::new(3, 4)] {
        let params = SamplerParams::exponential(eps.clone(), 200, 7_000);
        let summary = match lb_statistics(&params, 200, Policy::Slf) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, format!("ε={eps}: {e}")),
        };
        let bound = Rat::int(2) - &eps;
        let above = summary
            .rows
            .iter()
            .filter(|r| r.flow_alg > &bound * &r.flow_opt)
            .count();
        let target = bound.to_f64();
        let mean = summary.flow_ratio.mean;
        let ok = above == 0 && (mean - target).abs() <= EXP_MEAN_TOLERANCE;
        all &= ok;
        parts.push(format!(
            "ε={eps}: {above} above 2−ε, mean {mean:.4} ± {:.4} vs {target:.2}",
            summary.flow_ratio.half_width
        ));
    }
    Outcome::new(all, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let epsilons = [Rat::new(1, 4), Rat::new(1, 2), Rat::new(3, 4)];
    let insts = instances(8, 500, 10, &Rat::new(1, 2));
    let jobs: Vec<(&Instance, &Rat)> = insts
        .iter()
        .flat_map(|inst| epsilons.iter().map(move |eps| (inst, eps)))
        .collect();
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|(inst, eps)| match reduction_check(inst, eps) {
            Ok(report) if report.holds => None,
            Ok(report) => Some(format!(
                "ε={eps}: {:?}",
                report.links.iter().find(|l| !l.holds).map(|l| &l.name)
            )),
            Err(e) => Some(format!("ε={eps}: {e}")),
        })
        .collect();
    Outcome::new(
        failures.is_empty(),
        format!(
            "500 instances × 3 ε, {} chain failures{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!(" (first: {f})"))
                .unwrap_or_default()
        ),
    )
}

fn random_config(rng: &mut ChaCha8Rng) -> WaterFillingConfig {
    let n = rng.random_range(1..=10);
    let (mut x, mut xp, mut p) = (vec![], vec![], vec![]);
    for _ in 0..n {
        let d = rng.random_range(1..=4);
        let mut v: Vec<i64> = (0..3).map(|_| rng.random_range(0..=8)).collect();
        v.sort();
        x.push(Rat::new(v[0], d));
        xp.push(Rat::new(v[1], d));
        p.push(Rat::new(v[2], d));
    }
    WaterFillingConfig::new(x, xp, p).expect("sorted levels satisfy the precondition")
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let configs: Vec<WaterFillingConfig> = (0..10_000).map(|_| random_config(&mut rng)).collect();
    let failures = configs
        .par_iter()
        .filter(|cfg| !water_filling_dominance(cfg).is_ok_and(|r| r.holds))
        .count();
    Outcome::new(
        failures == 0,
        format!("10000 configurations, {failures} violations"),
    )
}

fn criterion_10() -> Outcome {
    let mut means = Vec::new();
    let mut parts = Vec::new();
    for k in [6u32, 8, 10] {
        let params = SamplerParams::geometric(k, 10_000);
        let summary = match lb_statistics(&params, 200, Policy::Slf) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, format!("k={k}: {e}")),
        };
        let ratios: Vec<f64> = summary
            .rows
            .iter()
            .filter_map(|r| match (r.delta_alg, r.delta_opt) {
                (Some(a), Some(o)) if o > 0 => Some(a as f64 / o as f64),
                _ => None,
            })
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        parts.push(format!(
            "k={k}: mean δ/δ* {mean:.4} over {} draws (ratio of means {:.4})",
            ratios.len(),
            summary.delta_ratio.unwrap_or(f64::NAN)
        ));
        means.push(mean);
    }
    let monotone = means.windows(2).all(|w| w[0] <= w[1]);
    Outcome::new(monotone, parts.join("; "))
}

/// Number, name, gating flag and check.
type Criterion = (u32, &'static str, bool, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "worked example is exact", true, criterion_1),
        (
            2,
            "update step reproduces the reference graph",
            true,
            criterion_2,
        ),
        (
            3,
            "SLF degenerates to SRPT (ε=1) and SETF (ε=0)",
            true,
            criterion_3,
        ),
        (4, "local competitiveness suite", true, criterion_4),
        (5, "certificate suite", true, criterion_5),
        (6, "deterministic adversary", false, criterion_6),
        (
            7,
            "simultaneous release, exponential sizes",
            true,
            criterion_7,
        ),
        (8, "reduction chain", true, criterion_8),
        (9, "water-filling dominance", true, criterion_9),
        (
            10,
            "randomized lower-bound trend (diagnostic)",
            false,
            criterion_10,
        ),
    ];
    let mut gating_failed = false;
    for (id, name, gating, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        let note = if gating { "" } else { " [non-gating]" };
        println!(
            "{verdict} {id:>2} {name}{note} ({secs:.1} s): {}",
            outcome.detail
        );
        gating_failed |= gating && !outcome.pass;
    }
    if gating_failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
