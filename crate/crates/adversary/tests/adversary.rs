use std::collections::BTreeSet;

use eclair_adversary::{
    deterministic_lb_run, exp_simultaneous_sample, geometric_tau, lb_statistics, phase_lb_sample,
    randomized_lb_sample, AdversaryError, SamplerKind, SamplerParams, EXP_FRACTION_BITS,
};
use eclair_core::{ceil_inv, Rat};
use eclair_metrics::delta_at;
use eclair_sim::{simulate, IntervalSet, Policy};
use proptest::prelude::*;

fn r(n: i64) -> Rat {
    Rat::int(n)
}

#[test]
fn one_round_at_one_half() {
    let run = deterministic_lb_run(Policy::Slf, &Rat::new(1, 2), 1, 0).unwrap();
    assert_eq!(run.batch, 2);
    assert_eq!(run.scale, r(1));
    let round = &run.rounds[0];
    // Round robin at rate 1/2 each: both jobs reach elapsed 1 at time 2.
    assert_eq!(round.t_prime, r(2));
    assert_eq!(round.trigger, 1);
    assert_eq!(round.declared, vec![(1, r(2)), (2, r(2))]);
    assert_eq!((round.j_max, round.j_min), (1, 2));
    assert_eq!(
        (round.claim_lhs.clone(), round.claim_rhs.clone()),
        (r(1), r(2))
    );
    assert_eq!(round.t_double_prime, r(2));
    assert_eq!(round.end, r(2));
    assert_eq!((round.delta_smart, round.delta_alg), (1, 2));
    assert_eq!(run.limit_ratio, Rat::new(3, 2));
    // Without a tail: SLF finishes both jobs at 3 and 4, the comparator at 2
    // and 4.
    assert_eq!(run.flow_alg, r(7));
    assert_eq!(run.flow_smart, r(6));
    assert_eq!(run.flow_opt, r(6));
}

#[test]
fn zero_rounds_is_empty() {
    let run = deterministic_lb_run(Policy::Slf, &Rat::new(1, 3), 0, 0).unwrap();
    assert!(run.rounds.is_empty());
    assert_eq!(run.ratio, r(1));
    assert!(run.instance.jobs.is_empty());
    let run = deterministic_lb_run(Policy::Slf, &Rat::new(1, 3), 0, 5).unwrap();
    assert_eq!(run.ratio, r(1));
    assert_eq!(run.flow_alg, r(5));
}

#[test]
fn three_rounds_at_one_third() {
    let run = deterministic_lb_run(Policy::Slf, &Rat::new(1, 3), 3, 0).unwrap();
    for (c, round) in run.rounds.iter().enumerate() {
        let c = c + 1;
        assert_eq!((round.delta_smart, round.delta_alg), (c, 3 * c));
    }
    let last = run.rounds.last().unwrap();
    assert_eq!(
        Rat::from(last.delta_alg) / Rat::from(last.delta_smart),
        r(3)
    );
}

#[test]
fn counts_against_every_live_policy() {
    for policy in [Policy::Slf, Policy::Setf, Policy::Rr] {
        for (n, d) in [(1, 2), (1, 3), (1, 4), (2, 5), (9, 10)] {
            let eps = Rat::new(n, d);
            let run = deterministic_lb_run(policy, &eps, 4, 0).unwrap();
            let big_k = ceil_inv(&eps) as usize;
            for round in &run.rounds {
                assert_eq!(round.delta_smart, round.round);
                assert_eq!(round.delta_alg, round.round * big_k, "{policy} ε = {eps}");
                assert!(round.claim_lhs < round.claim_rhs);
            }
        }
    }
}

#[test]
fn rejected_inputs() {
    assert!(matches!(
        deterministic_lb_run(Policy::Srpt, &Rat::new(1, 2), 1, 0),
        Err(AdversaryError::Input(_))
    ));
    for eps in [r(0), r(1), Rat::new(3, 2)] {
        assert!(matches!(
            deterministic_lb_run(Policy::Slf, &eps, 1, 0),
            Err(AdversaryError::Input(_))
        ));
    }
}

#[test]
fn round_quantities_follow_the_construction() {
    let eps = Rat::new(1, 4);
    let run = deterministic_lb_run(Policy::Slf, &eps, 4, 0).unwrap();
    let lift = &eps / (r(1) - &eps);
    let batch = Rat::from(run.batch);
    for round in &run.rounds {
        match &round.r_star {
            None => assert_eq!(round.quota, run.scale),
            Some(rs) => assert_eq!(round.quota, rs / &batch / &lift),
        }
        let floor = &lift * &round.quota;
        for (_, p) in &round.declared {
            assert!(*p <= &round.quota / (r(1) - &eps) || *p == floor);
        }
        assert!(round.t_prime <= round.end && round.t_double_prime <= round.end);
    }
}

#[test]
fn replay_reproduces_the_live_run() {
    // Declaring every size up front gives the policy the same information
    // as the live run (touched jobs become known exactly when declared), so
    // a plain simulation of the final instance must show the same counts.
    for (eps, c) in [
        (Rat::new(1, 2), 3),
        (Rat::new(1, 3), 2),
        (Rat::new(2, 5), 3),
    ] {
        let run = deterministic_lb_run(Policy::Slf, &eps, c, 3).unwrap();
        let sched = simulate(&run.instance, Policy::Slf, &r(1), &IntervalSet::empty()).unwrap();
        for round in &run.rounds {
            // The next batch arrives exactly at the end of the round.
            let held = sched
                .state_at(&round.end)
                .keys()
                .filter(|id| **id <= (round.round * run.batch) as u64)
                .count();
            assert_eq!(held, round.delta_alg);
        }
        // At the start of the tail every held job has at least one unit
        // left, as does the first unit job.
        let last = run.rounds.last().unwrap();
        assert_eq!(delta_at(&sched, &run.tail_start, &r(1)), last.delta_alg + 1);
        assert_eq!(
            eclair_metrics::total_flow_time(&sched).unwrap(),
            run.flow_alg
        );
    }
}

#[test]
fn ratio_grows_with_the_tail() {
    let eps = Rat::new(1, 2);
    let ratios: Vec<Rat> = [0u64, 10, 100, 1000]
        .iter()
        .map(|&m| deterministic_lb_run(Policy::Slf, &eps, 2, m).unwrap().ratio)
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] <= w[1]), "{ratios:?}");
    let limit = Rat::new(5, 3);
    assert!(ratios[3] < limit && ratios[3] > &limit - Rat::new(1, 100));
}

#[test]
fn transcript_documents() {
    let run = deterministic_lb_run(Policy::Slf, &Rat::new(1, 2), 2, 1).unwrap();
    let lines: Vec<serde_json::Value> = run
        .rounds_jsonl()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["delta_alg"], 4);
    let doc = run.to_json();
    assert_eq!(doc["batch"], 2);
    assert_eq!(doc["rounds"].as_array().unwrap().len(), 2);
    assert_eq!(run.instance.meta.as_ref().unwrap()["kind"], "deterministic");
}

#[test]
fn geometric_family() {
    let (inst, tau) = randomized_lb_sample(1, 99).unwrap();
    assert_eq!((inst.jobs.len(), tau), (2, r(0)));
    let (inst, tau) = randomized_lb_sample(10, 2024).unwrap();
    assert_eq!(inst.jobs.len(), 1024);
    assert_eq!(inst.epsilon, Rat::new(1, 20));
    assert_eq!(tau, Rat::from(geometric_tau(10)));
    let sizes: Vec<f64> = inst
        .jobs
        .iter()
        .map(|j| j.size.as_ref().unwrap().to_f64())
        .collect();
    assert!(inst
        .jobs
        .iter()
        .all(|j| j.size.as_ref().unwrap().is_integer()));
    assert!(sizes.iter().all(|&p| p >= 2.0));
    // Mean 3, variance 2.
    let mean = sizes.iter().sum::<f64>() / 1024.0;
    assert!(
        (mean - 3.0).abs() <= 3.0 * (2.0f64 / 1024.0).sqrt(),
        "mean {mean}"
    );
    let meta = inst.meta.unwrap();
    assert_eq!(
        (meta["kind"].as_str(), meta["seed"].as_u64()),
        (Some("geometric"), Some(2024))
    );
    assert!(randomized_lb_sample(0, 1).is_err());
}

#[test]
fn geometric_tau_matches_floating_point() {
    for k in 1..=20u32 {
        let n = 2f64.powi(k as i32);
        let approx = 3.0 * (n - n.powf(0.75));
        let tau = geometric_tau(k) as f64;
        assert!(tau <= approx + 1e-9 && approx < tau + 1.0, "k = {k}");
    }
}

#[test]
fn phase_family() {
    let eps = Rat::new(1, 2);
    assert!(phase_lb_sample(&eps, 0, 1).unwrap().jobs.is_empty());
    let inst = phase_lb_sample(&eps, 3, 8).unwrap();
    let lambda = r(9);
    let lengths = [lambda.pow(3), lambda.pow(2), lambda.clone()];
    let mut start = r(0);
    for (slot, len) in lengths.iter().enumerate() {
        let ids = [2 * slot as u64 + 1, 2 * slot as u64 + 2];
        let sizes: BTreeSet<Rat> = ids
            .iter()
            .map(|id| inst.job(*id).unwrap().size.clone().unwrap())
            .collect();
        assert_eq!(sizes, BTreeSet::from([len.clone(), len * r(2)]));
        for id in ids {
            assert_eq!(inst.job(id).unwrap().release.time, start);
        }
        start += len;
    }
    let horizon: Rat = inst.meta.as_ref().unwrap()["horizon"]
        .as_str()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(horizon, r(729 + 81 + 9));
    assert_eq!(horizon, start);
    // The coin is fair.
    let first_short = (0..2000u64)
        .filter(|&seed| {
            let inst = phase_lb_sample(&eps, 1, seed).unwrap();
            inst.job(1).unwrap().size == Some(r(9))
        })
        .count();
    assert!((900..=1100).contains(&first_short), "{first_short}");
}

#[test]
fn exponential_family() {
    let eps = Rat::new(1, 2);
    let one = exp_simultaneous_sample(&eps, 1, 3).unwrap();
    assert!(one.jobs[0].size.as_ref().unwrap().is_positive());
    let inst = exp_simultaneous_sample(&eps, 10_000, 77).unwrap();
    let sizes: Vec<&Rat> = inst.jobs.iter().map(|j| j.size.as_ref().unwrap()).collect();
    let mean = sizes.iter().map(|p| p.to_f64()).sum::<f64>() / 10_000.0;
    assert!((0.97..=1.03).contains(&mean), "mean {mean}");
    let distinct: BTreeSet<&Rat> = sizes.iter().copied().collect();
    assert_eq!(distinct.len(), sizes.len());
    let grid = Rat::dyadic(1.into(), EXP_FRACTION_BITS);
    assert!(sizes.iter().all(|p| (*p / &grid).is_integer()));
    assert!(exp_simultaneous_sample(&eps, 0, 1).is_err());
}

#[test]
fn samplers_are_reproducible() {
    for params in [
        SamplerParams::geometric(5, 11),
        SamplerParams::phase(Rat::new(1, 3), 4, 11),
        SamplerParams::exponential(Rat::new(1, 3), 50, 11),
    ] {
        let a = params.draw().unwrap().instance.to_json();
        let b = params.draw().unwrap().instance.to_json();
        let c = params.with_seed(12).draw().unwrap().instance.to_json();
        assert_eq!(a, b);
        assert_ne!(a, c, "{:?}", params.kind);
        assert!(a.contains(&format!("\"kind\": \"{}\"", params.kind)));
    }
    assert_eq!(
        "exp".parse::<SamplerKind>().unwrap(),
        SamplerKind::Exponential
    );
    assert!("uniform".parse::<SamplerKind>().is_err());
}

#[test]
fn statistics_single_job_and_bounds() {
    let summary = lb_statistics(
        &SamplerParams::exponential(Rat::new(1, 4), 1, 0),
        4,
        Policy::Slf,
    )
    .unwrap();
    assert!(summary.rows.iter().all(|row| row.flow_ratio == 1.0));
    assert_eq!(summary.target, Some(1.75));
    for (n, d) in [(1, 4), (1, 2), (3, 4)] {
        let eps = Rat::new(n, d);
        let bound = 2.0 - eps.to_f64();
        let summary =
            lb_statistics(&SamplerParams::exponential(eps, 40, 5), 6, Policy::Slf).unwrap();
        for row in &summary.rows {
            let exact = &row.flow_alg / &row.flow_opt;
            assert!(
                exact <= Rat::new(2 * d - n, d),
                "{} > {bound}",
                row.flow_ratio
            );
        }
    }
}

#[test]
fn statistics_do_not_depend_on_threads() {
    let params = SamplerParams::geometric(4, 3);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| lb_statistics(&params, 12, Policy::Slf).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a, b);
    assert!(a.delta_ratio.is_some());
    assert_eq!(a.rows[0].horizon, Some(r(24)));
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariants_for_any_epsilon(num in 1i64..20, extra in 1i64..20, rounds in 1usize..4) {
        let eps = Rat::new(num, num + extra);
        let run = deterministic_lb_run(Policy::Slf, &eps, rounds, 2).unwrap();
        let big_k = ceil_inv(&eps) as usize;
        for round in &run.rounds {
            prop_assert_eq!(round.delta_alg, round.round * big_k);
            prop_assert_eq!(round.delta_smart, round.round);
            prop_assert!(round.claim_lhs < round.claim_rhs);
        }
        prop_assert!(run.flow_opt <= run.flow_smart);
    }
}
