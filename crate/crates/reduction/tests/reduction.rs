use eclair_core::{Instance, Job, Rat};
use eclair_reduction::{
    reduction_check, setfi_vs_setf, speed_corollary_check, water_filling_dominance,
    water_filling_trajectories, ReductionError, WaterFillingConfig,
};
use eclair_sim::{simulate, IntervalSet, Policy};
use proptest::prelude::*;

fn ints(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&n| Rat::int(n)).collect()
}

fn toy() -> Instance {
    Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1])
}

/// Independent water filling: repeatedly raise the lowest non-full jars to
/// the next level or capacity. Returns `(time, levels)` at every change.
fn oracle_fill(x: &[Rat], p: &[Rat]) -> Vec<(Rat, Vec<Rat>)> {
    let mut levels = x.to_vec();
    let mut t = Rat::zero();
    let mut out = vec![(t.clone(), levels.clone())];
    loop {
        let open: Vec<usize> = (0..levels.len()).filter(|&i| levels[i] < p[i]).collect();
        let Some(low) = open.iter().map(|&i| levels[i].clone()).min() else {
            return out;
        };
        let pool: Vec<usize> = open.iter().copied().filter(|&i| levels[i] == low).collect();
        let next_level = open
            .iter()
            .map(|&i| levels[i].clone())
            .filter(|l| *l > low)
            .min();
        let next_cap = pool
            .iter()
            .map(|&i| p[i].clone())
            .min()
            .expect("pool non-empty");
        let target = match next_level {
            Some(l) if l < next_cap => l,
            _ => next_cap,
        };
        t += (&target - &low) * Rat::from(pool.len());
        for &i in &pool {
            levels[i] = target.clone();
        }
        out.push((t.clone(), levels.clone()));
    }
}

#[test]
fn hand_traced_jars() {
    let cfg = WaterFillingConfig::new(ints(&[0, 0]), ints(&[0, 1]), ints(&[2, 2])).unwrap();
    let traj = water_filling_trajectories(&cfg).unwrap();
    let (e, ep) = traj.levels_at(&Rat::one());
    assert_eq!(e, vec![Rat::new(1, 2), Rat::new(1, 2)]);
    assert_eq!(ep, ints(&[1, 1]));
    let (e, ep) = traj.levels_at(&Rat::new(1, 2));
    assert_eq!(e, vec![Rat::new(1, 4), Rat::new(1, 4)]);
    assert_eq!(ep, vec![Rat::new(1, 2), Rat::one()]);
    assert_eq!(traj.full_first, Rat::int(4));
    assert_eq!(traj.full_second, Rat::int(3));
    assert_eq!(traj.times, ints(&[0, 1, 3, 4]));
    let report = water_filling_dominance(&cfg).unwrap();
    assert!(report.holds);
    assert_eq!(report.checked_times, 4);
    assert!(report.violation.is_none());
}

#[test]
fn equal_starts_give_equal_trajectories() {
    let x = vec![Rat::new(1, 3), Rat::zero(), Rat::int(2), Rat::new(5, 2)];
    let p = vec![Rat::int(2), Rat::new(1, 2), Rat::int(3), Rat::new(5, 2)];
    let cfg = WaterFillingConfig::new(x.clone(), x, p).unwrap();
    let traj = water_filling_trajectories(&cfg).unwrap();
    assert_eq!(traj.first, traj.second);
    assert_eq!(traj.full_first, traj.full_second);
    assert!(water_filling_dominance(&cfg).unwrap().holds);
}

#[test]
fn filling_ends_when_the_volume_runs_out() {
    let x = vec![Rat::new(1, 3), Rat::zero(), Rat::int(1)];
    let xp = vec![Rat::new(1, 2), Rat::one(), Rat::int(1)];
    let p = vec![Rat::int(2), Rat::new(3, 2), Rat::int(3)];
    let cfg = WaterFillingConfig::new(x.clone(), xp.clone(), p.clone()).unwrap();
    let traj = water_filling_trajectories(&cfg).unwrap();
    let gap = |lv: &[Rat]| -> Rat { p.iter().zip(lv).map(|(c, l)| c - l).sum() };
    assert_eq!(traj.full_first, gap(&x));
    assert_eq!(traj.full_second, gap(&xp));
    let (e, ep) = traj.levels_at(&Rat::int(100));
    assert_eq!(e, p);
    assert_eq!(ep, p);
    // Before the set is full, its total level grows at unit rate.
    let t = Rat::new(7, 5);
    let (e, _) = traj.levels_at(&t);
    let start: Rat = x.iter().cloned().sum();
    assert_eq!(e.into_iter().sum::<Rat>(), start + t);
}

#[test]
fn trajectories_match_a_direct_fill() {
    let x = vec![Rat::new(1, 2), Rat::zero(), Rat::int(2), Rat::zero()];
    let xp = vec![Rat::one(), Rat::new(1, 4), Rat::int(2), Rat::new(3, 2)];
    let p = vec![Rat::int(3), Rat::one(), Rat::new(5, 2), Rat::int(2)];
    let cfg = WaterFillingConfig::new(x.clone(), xp.clone(), p.clone()).unwrap();
    let traj = water_filling_trajectories(&cfg).unwrap();
    for (t, levels) in oracle_fill(&x, &p) {
        assert_eq!(traj.levels_at(&t).0, levels, "first set at {t}");
    }
    for (t, levels) in oracle_fill(&xp, &p) {
        assert_eq!(traj.levels_at(&t).1, levels, "second set at {t}");
    }
}

#[test]
fn empty_and_full_jars() {
    let cfg = WaterFillingConfig::new(
        vec![Rat::zero(), Rat::int(2), Rat::zero()],
        vec![Rat::zero(), Rat::int(2), Rat::one()],
        vec![Rat::zero(), Rat::int(2), Rat::one()],
    )
    .unwrap();
    let traj = water_filling_trajectories(&cfg).unwrap();
    assert_eq!(traj.full_first, Rat::one());
    assert_eq!(traj.full_second, Rat::zero());
    assert!(traj
        .first
        .iter()
        .all(|lv| lv[0].is_zero() && lv[1] == Rat::int(2)));
    assert!(water_filling_dominance(&cfg).unwrap().holds);

    let none = WaterFillingConfig::new(vec![], vec![], vec![]).unwrap();
    assert!(none.is_empty());
    let report = water_filling_dominance(&none).unwrap();
    assert!(report.holds);
    assert_eq!(report.checked_times, 1);
}

#[test]
fn violated_preconditions_are_rejected() {
    let cases = [
        (ints(&[1, 0]), ints(&[0, 0]), ints(&[2, 2])),
        (ints(&[0, 0]), ints(&[0, 3]), ints(&[2, 2])),
        (ints(&[-1, 0]), ints(&[0, 0]), ints(&[2, 2])),
        (ints(&[0]), ints(&[0, 0]), ints(&[2, 2])),
    ];
    for (x, xp, p) in cases {
        let raw = WaterFillingConfig {
            x: x.clone(),
            x_prime: xp.clone(),
            p: p.clone(),
        };
        assert!(matches!(
            water_filling_dominance(&raw),
            Err(ReductionError::Precondition(_))
        ));
        assert!(matches!(
            WaterFillingConfig::new(x, xp, p),
            Err(ReductionError::Precondition(_))
        ));
    }
}

#[test]
fn no_forbidden_time_changes_nothing() {
    let report = setfi_vs_setf(&toy(), &IntervalSet::empty()).unwrap();
    assert!(report.holds);
    assert_eq!(report.flow_setf, report.flow_setfi);
    let plain = simulate(&toy(), Policy::Setf, &Rat::one(), &IntervalSet::empty()).unwrap();
    assert_eq!(
        plain.completions.values().cloned().sum::<Rat>(),
        report.flow_setf
    );
}

#[test]
fn forbidden_time_only_delays() {
    let gap = IntervalSet::from_pairs(vec![(Rat::one(), Rat::int(2))]).unwrap();
    let report = setfi_vs_setf(&toy(), &gap).unwrap();
    assert!(report.holds, "{report:?}");
    assert!(report.elapsed_violation.is_none() && report.count_violation.is_none());
    // All six jobs are still running at time 1, so each completes exactly one
    // unit later.
    assert_eq!(report.flow_setfi, &report.flow_setf + Rat::int(6));
    let setf = simulate(&toy(), Policy::Setf, &Rat::one(), &IntervalSet::empty()).unwrap();
    let setfi = simulate(&toy(), Policy::Setf, &Rat::one(), &gap).unwrap();
    for (id, c) in &setf.completions {
        assert_eq!(setfi.completions[id], c + Rat::one());
    }
}

#[test]
fn toy_chain_at_one_half() {
    let report = reduction_check(&toy(), &Rat::new(1, 2)).unwrap();
    assert!(report.holds, "{:?}", report.links);
    assert_eq!(report.delta, Rat::one());
    let names: Vec<&str> = report.links.iter().map(|l| l.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "scale_identity",
            "scaled_counts",
            "setfi_dominance",
            "setfi_mirrors_slf",
            "setfi_below_slf",
            "chain"
        ]
    );
    // SLF works on known jobs for exactly half of the total work.
    let measure: Rat = report.forbidden.iter().map(|(a, b)| b - a).sum();
    assert_eq!(measure, Rat::int(9));
    let first = &report.rows[0];
    assert_eq!(
        (first.setf_fast, first.setf_scaled, first.setfi, first.slf),
        (6, 6, 6, 6)
    );
    // Job 6 (size 1) becomes known at 3, when SLF turns to it; SETF at
    // double speed finishes it then.
    let at_three = report.rows.iter().find(|r| r.t == Rat::int(3)).unwrap();
    assert_eq!((at_three.setf_fast, at_three.slf), (5, 6));
    let last = report.rows.last().unwrap();
    assert_eq!(last.slf, 0);
    assert_eq!(last.t, Rat::int(18));
}

#[test]
fn single_job_chain() {
    let inst = Instance::new(Rat::new(1, 2), vec![Job::new(1, Rat::int(2), Rat::int(4))]).unwrap();
    for eps in [Rat::new(1, 4), Rat::new(1, 2), Rat::new(3, 4)] {
        let report = reduction_check(&inst, &eps).unwrap();
        assert!(report.holds);
        for r in &report.rows {
            for c in [r.setf_fast, r.setf_scaled, r.setfi, r.slf] {
                assert!(c <= 1);
            }
            assert_eq!(r.setf_fast, r.setfi);
        }
        let known_from = Rat::int(2) + (Rat::one() - &eps) * Rat::int(4);
        assert_eq!(report.forbidden, vec![(known_from, Rat::int(6))]);
    }
}

#[test]
fn reduction_input_errors() {
    for eps in [Rat::zero(), Rat::one(), Rat::int(2)] {
        assert!(matches!(
            reduction_check(&toy(), &eps),
            Err(ReductionError::Input(_))
        ));
        assert!(matches!(
            speed_corollary_check(&toy(), &eps),
            Err(ReductionError::Input(_))
        ));
    }
    let open = Instance::new(Rat::new(1, 2), vec![Job::undeclared(1, Rat::zero())]).unwrap();
    assert!(matches!(
        reduction_check(&open, &Rat::new(1, 2)),
        Err(ReductionError::Input(_))
    ));
    assert!(matches!(
        setfi_vs_setf(&open, &IntervalSet::empty()),
        Err(ReductionError::Input(_))
    ));
}

#[test]
fn empty_instance_chain() {
    let empty = Instance::new(Rat::new(1, 2), vec![]).unwrap();
    let report = reduction_check(&empty, &Rat::new(1, 3)).unwrap();
    assert!(report.holds);
    assert!(report.forbidden.is_empty());
    assert!(report.rows.iter().all(|r| r.slf == 0 && r.setf_fast == 0));
}

#[test]
fn corollary_on_the_toy() {
    for (eps, bound) in [
        (Rat::new(1, 2), 3),
        (Rat::new(1, 3), 4),
        (Rat::new(2, 3), 3),
    ] {
        let report = speed_corollary_check(&toy(), &eps).unwrap();
        assert_eq!(report.bound, bound);
        assert!(report.holds);
        assert!(report.worst_ratio <= Rat::from(bound));
        assert!(report.worst_ratio >= Rat::one());
    }
}

#[test]
fn report_json_shape() {
    let report = reduction_check(&toy(), &Rat::new(1, 2)).unwrap();
    let json = report.to_json();
    assert_eq!(json["delta"], "1");
    assert_eq!(json["holds"], true);
    assert_eq!(json["links"].as_array().unwrap().len(), 6);
    assert!(json["links"][0].get("detail").is_none());
    assert_eq!(json["rows"][0]["slf"], 6);
}

fn arb_rat(lo: i64, hi: i64) -> impl Strategy<Value = Rat> {
    (lo..hi, 1i64..4).prop_map(|(n, d)| Rat::new(n, d))
}

fn arb_config() -> impl Strategy<Value = WaterFillingConfig> {
    prop::collection::vec((0u8..4, 0i64..5, 0i64..5, 0i64..5, 1i64..4), 0..=10).prop_map(|jars| {
        let (mut x, mut xp, mut p) = (vec![], vec![], vec![]);
        for (kind, a, b, c, d) in jars {
            let mut v = [Rat::new(a, d), Rat::new(b, d), Rat::new(c, d)];
            v.sort();
            let [lo, mid, hi] = v;
            // Bias towards ties, full jars and empty capacities.
            let (lo, mid, hi) = match kind {
                0 => (lo.clone(), lo, hi),
                1 => (lo, hi.clone(), hi),
                _ => (lo, mid, hi),
            };
            x.push(lo);
            xp.push(mid);
            p.push(hi);
        }
        WaterFillingConfig { x, x_prime: xp, p }
    })
}

fn arb_instance(max: usize) -> impl Strategy<Value = Instance> {
    prop::collection::vec((arb_rat(0, 12), arb_rat(1, 13)), 1..=max).prop_map(|jobs| {
        let jobs = jobs
            .into_iter()
            .enumerate()
            .map(|(i, (q, p))| Job::new(i as u64 + 1, q, p))
            .collect();
        Instance::new(Rat::new(1, 2), jobs).unwrap()
    })
}

fn arb_intervals() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((arb_rat(0, 20), arb_rat(0, 6)), 0..4).prop_map(|pairs| {
        IntervalSet::from_pairs(pairs.into_iter().map(|(a, l)| (a.clone(), a + l)).collect())
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn water_filling_dominance_holds(cfg in arb_config()) {
        let report = water_filling_dominance(&cfg).unwrap();
        prop_assert!(report.holds, "{:?}", report.violation);
    }

    #[test]
    fn trajectories_follow_the_direct_fill(cfg in arb_config()) {
        let traj = water_filling_trajectories(&cfg).unwrap();
        for (t, levels) in oracle_fill(&cfg.x, &cfg.p) {
            prop_assert_eq!(traj.levels_at(&t).0, levels);
        }
    }

    #[test]
    fn setfi_never_gets_ahead(inst in arb_instance(8), gaps in arb_intervals()) {
        let report = setfi_vs_setf(&inst, &gaps).unwrap();
        prop_assert!(report.holds, "{:?}", report);
        prop_assert!(report.flow_setf <= report.flow_setfi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_holds(
        inst in arb_instance(8),
        eps in prop::sample::select(vec![Rat::new(1, 4), Rat::new(1, 2), Rat::new(3, 4)]),
    ) {
        let report = reduction_check(&inst, &eps).unwrap();
        prop_assert!(report.holds, "{:?}", report.links);
    }

    #[test]
    fn fast_setf_stays_within_the_bound(
        inst in arb_instance(8),
        eps in prop::sample::select(vec![Rat::new(1, 5), Rat::new(1, 3), Rat::new(1, 2), Rat::new(4, 5)]),
    ) {
        let report = speed_corollary_check(&inst, &eps).unwrap();
        prop_assert!(report.holds, "{:?}", report.violation);
    }
}
