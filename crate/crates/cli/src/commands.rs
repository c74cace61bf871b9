//! The subcommands. Each returns [`Status::Failed`] when a check fails and
//! an error for anything the user has to fix.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use eclair_adversary::{
    deterministic_lb_run, lb_statistics, AdversaryError, SamplerKind, SamplerParams,
};
use eclair_certifier::{create_valid_assignment, verify_certificate, CertifierError};
use eclair_core::{ceil_inv, parse_instance, Instance, Rat};
use eclair_metrics::{local_competitiveness, total_flow_time, write_counts_csv};
use eclair_reduction::{
    reduction_check, speed_corollary_check, water_filling_dominance, ReductionError,
    WaterFillingConfig,
};
use eclair_sim::{simulate, IntervalSet, Policy, Schedule};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::{
    AdversaryCommand, CertifyArgs, Cli, Command, CompareArgs, DetArgs, FamilyArgs, FamilyStatsArgs,
    InstanceArgs, ReduceArgs, SampleArgs, SimulateArgs, SweepArgs,
};

/// Outcome of a command that ran to the end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Every check passed.
    Ok,
    /// A verification or property check failed.
    Failed,
}

impl Status {
    fn from_pass(pass: bool) -> Status {
        if pass {
            Status::Ok
        } else {
            Status::Failed
        }
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.jobs {
        if k == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().context("cannot start the worker pool")?;
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create output directory {}", cli.out.display()))?;
    let out = cli.out.as_path();
    pool.install(|| match &cli.command {
        Command::Simulate(args) => cmd_simulate(args, out),
        Command::Compare(args) => cmd_compare(args, out),
        Command::Certify(args) => cmd_certify(args, out),
        Command::Adversary(AdversaryCommand::Det(args)) => cmd_adversary_det(args, out),
        Command::Adversary(AdversaryCommand::Sample(args)) => {
            cmd_adversary_sample(args, need_seed(cli)?, out)
        }
        Command::Sample(args) => cmd_sample(args, need_seed(cli)?, out),
        Command::Sweep(args) => cmd_sweep(args, need_seed(cli)?, out),
        Command::Reduce(args) => cmd_reduce(args, out),
    })
}

fn need_seed(cli: &Cli) -> Result<u64> {
    cli.seed
        .ok_or_else(|| anyhow!("this command draws random instances and needs --seed"))
}

fn load_instance(args: &InstanceArgs) -> Result<Instance> {
    let path = &args.instance;
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let inst = parse_instance(&text).with_context(|| format!("in {}", path.display()))?;
    match &args.epsilon {
        Some(eps) => Ok(inst.with_epsilon(eps.clone())?),
        None => Ok(inst),
    }
}

fn write_text(out: &Path, name: &str, text: &str) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(out, name, &(text + "\n"))
}

fn create(out: &Path, name: &str) -> Result<fs::File> {
    let path = out.join(name);
    fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))
}

fn run_policy(
    inst: &Instance,
    policy: Policy,
    speed: &Rat,
    forbidden: &IntervalSet,
) -> Result<Schedule> {
    Ok(simulate(inst, policy, speed, forbidden)?)
}

fn srpt(inst: &Instance) -> Result<Schedule> {
    run_policy(inst, Policy::Srpt, &Rat::one(), &IntervalSet::empty())
}

fn ratio(a: &Rat, b: &Rat) -> Rat {
    if b.is_zero() {
        Rat::one()
    } else {
        a / b
    }
}

fn load_forbidden(path: &Path) -> Result<IntervalSet> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let pairs: Vec<(Rat, Rat)> = serde_json::from_str(&text)
        .with_context(|| format!("{} must be a list of [start, end] pairs", path.display()))?;
    Ok(IntervalSet::from_pairs(pairs)?)
}

fn cmd_simulate(args: &SimulateArgs, out: &Path) -> Result<Status> {
    let inst = load_instance(&args.input)?;
    let forbidden = match &args.forbidden {
        Some(path) => load_forbidden(path)?,
        None => IntervalSet::empty(),
    };
    let sched = run_policy(&inst, args.policy, &args.speed, &forbidden)?;
    sched.write_csv(create(out, "schedule.csv")?)?;
    sched.write_events_jsonl(create(out, "events.jsonl")?)?;

    let flow = total_flow_time(&sched)?;
    let opt = srpt(&inst)?;
    let flow_opt = total_flow_time(&opt)?;
    // ⌈1/ε⌉ only bounds SLF's counts for positive ε.
    let local = inst.epsilon.is_positive().then(|| {
        let rho = Rat::from(ceil_inv(&inst.epsilon));
        local_competitiveness(&sched, &opt, &rho)
    });
    let doc = json!({
        "policy": args.policy.to_string(),
        "epsilon": inst.epsilon,
        "speed": args.speed,
        "jobs": inst.jobs.len(),
        "flow": flow,
        "flow_opt": flow_opt,
        "ratio": ratio(&flow, &flow_opt),
        "rho": local.as_ref().map(|r| r.rho.clone()),
        "local_ok": local.as_ref().map(|r| r.pass),
        "max_count_ratio": local.as_ref().map(|r| r.max_count_ratio.clone()),
        "completions": sched.completions,
        "makespan": sched.completions.values().max(),
    });
    write_json(out, "metrics.json", &doc)?;
    println!(
        "{} on {} jobs: flow {} (SRPT {}), {} segments",
        args.policy,
        inst.jobs.len(),
        flow,
        flow_opt,
        sched.segments.len()
    );
    Ok(Status::Ok)
}

fn cmd_compare(args: &CompareArgs, out: &Path) -> Result<Status> {
    let inst = load_instance(&args.input)?;
    if !inst.epsilon.is_positive() {
        bail!("compare needs ε > 0 (the bound ⌈1/ε⌉ is infinite at ε = 0)");
    }
    let alg = run_policy(&inst, args.policy, &Rat::one(), &IntervalSet::empty())?;
    let opt = srpt(&inst)?;
    let rho = Rat::from(ceil_inv(&inst.epsilon));
    let report = local_competitiveness(&alg, &opt, &rho);
    let (flow_alg, flow_opt) = (total_flow_time(&alg)?, total_flow_time(&opt)?);
    let doc = json!({
        "policy": args.policy.to_string(),
        "epsilon": inst.epsilon,
        "rho": rho,
        "flow_alg": flow_alg,
        "flow_opt": flow_opt,
        "ratio": ratio(&flow_alg, &flow_opt),
        "local_ok": report.pass,
        "max_count_ratio": report.max_count_ratio,
        "witness_time": report.witness_time,
    });
    write_json(out, "compare.json", &doc)?;
    write_counts_csv(&report, create(out, "counts.csv")?)?;
    println!(
        "{} vs SRPT: flow ratio {} ({:.6}), max count ratio {} against ⌈1/ε⌉ = {}: {}",
        args.policy,
        doc["ratio"].as_str().unwrap_or_default(),
        ratio(&flow_alg, &flow_opt).to_f64(),
        report.max_count_ratio,
        rho,
        if report.pass { "ok" } else { "VIOLATED" }
    );
    if !report.pass {
        println!("first violation at t = {}", report.witness_time);
    }
    Ok(Status::from_pass(report.pass))
}

#[derive(Serialize)]
struct CertifyRow {
    t: Rat,
    pass: bool,
    slf_count: usize,
    opt_count: usize,
    phi: Option<Rat>,
    failure: Option<String>,
}

fn certify_at(inst: &Instance, t: &Rat) -> Result<CertifyRow> {
    match create_valid_assignment(inst, t) {
        Ok(cert) => {
            let report = verify_certificate(&cert);
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect();
            Ok(CertifyRow {
                t: t.clone(),
                pass: report.pass,
                slf_count: report.slf_count,
                opt_count: report.opt_count,
                phi: Some(report.phi),
                failure: (!failed.is_empty()).then(|| failed.join(";")),
            })
        }
        Err(CertifierError::Input(msg)) => Err(anyhow!("invalid input: {msg}")),
        Err(CertifierError::Counterexample(c)) => Ok(CertifyRow {
            t: t.clone(),
            pass: false,
            slf_count: 0,
            opt_count: 0,
            phi: None,
            failure: Some(format!("{}: {}", c.check, c.detail)),
        }),
    }
}

fn cmd_certify(args: &CertifyArgs, out: &Path) -> Result<Status> {
    let inst = load_instance(&args.input)?;
    if let Some(t) = &args.time {
        if t.is_negative() {
            bail!("the target time must be non-negative, got {t}");
        }
        return match create_valid_assignment(&inst, t) {
            Ok(cert) => {
                let report = verify_certificate(&cert);
                write_json(out, "certificate.json", &cert.to_json())?;
                write_text(out, "transcript.jsonl", &cert.transcript_jsonl())?;
                write_json(out, "verification.json", &report)?;
                for check in &report.checks {
                    println!(
                        "{:<16} {}  {}",
                        check.name,
                        if check.pass { "pass" } else { "FAIL" },
                        check.detail
                    );
                }
                println!(
                    "t = {t}: |SLF| = {}, |OPT| = {}, prefix expansion {}",
                    report.slf_count, report.opt_count, report.phi
                );
                Ok(Status::from_pass(report.pass))
            }
            Err(CertifierError::Input(msg)) => Err(anyhow!("invalid input: {msg}")),
            Err(CertifierError::Counterexample(c)) => {
                write_json(out, "counterexample.json", &c)?;
                println!("construction failed: {}: {}", c.check, c.detail);
                Ok(Status::Failed)
            }
        };
    }
    let mut times: BTreeSet<Rat> = BTreeSet::new();
    if inst.epsilon.is_positive() {
        let none = IntervalSet::empty();
        times.extend(run_policy(&inst, Policy::Slf, &Rat::one(), &none)?.event_times());
        times.extend(srpt(&inst)?.event_times());
    }
    times.insert(Rat::zero());
    let times: Vec<Rat> = times.into_iter().collect();
    let rows: Vec<CertifyRow> = times
        .par_iter()
        .map(|t| certify_at(&inst, t))
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(create(out, "certify.csv")?);
    w.write_record(["t", "pass", "slf_count", "opt_count", "phi", "failure"])?;
    for r in &rows {
        w.write_record([
            r.t.to_string(),
            r.pass.to_string(),
            r.slf_count.to_string(),
            r.opt_count.to_string(),
            r.phi.as_ref().map(Rat::to_string).unwrap_or_default(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} event times certified, {failed} failed", rows.len());
    for r in rows.iter().filter(|r| !r.pass).take(5) {
        println!("  t = {}: {}", r.t, r.failure.as_deref().unwrap_or(""));
    }
    Ok(Status::from_pass(failed == 0))
}

fn adversary_status(err: AdversaryError) -> Result<Status> {
    match err {
        AdversaryError::Claim { .. } => {
            println!("construction claim failed: {err}");
            Ok(Status::Failed)
        }
        other => Err(other.into()),
    }
}

fn cmd_adversary_det(args: &DetArgs, out: &Path) -> Result<Status> {
    let run = match deterministic_lb_run(args.policy, &args.epsilon, args.rounds, args.tail) {
        Ok(run) => run,
        Err(e) => return adversary_status(e),
    };
    write_json(out, "transcript.json", &run.to_json())?;
    write_text(out, "rounds.jsonl", &run.rounds_jsonl())?;
    write_text(out, "instance.json", &(run.instance.to_json() + "\n"))?;
    for r in &run.rounds {
        println!(
            "round {}: t = {}, t′ = {}, end = {}, |ALG| = {}, |A′| = {}",
            r.round, r.t_c, r.t_prime, r.end, r.delta_alg, r.delta_smart
        );
    }
    println!(
        "tail {}: flow {} vs comparator {} (ratio {:.6}), vs SRPT {:.6}, limit {}",
        run.tail,
        run.flow_alg,
        run.flow_smart,
        run.ratio.to_f64(),
        run.ratio_opt.to_f64(),
        run.limit_ratio
    );
    Ok(Status::Ok)
}

fn family_params(args: &FamilyArgs, seed: u64) -> Result<SamplerParams> {
    let need_eps = || {
        args.epsilon
            .clone()
            .ok_or_else(|| anyhow!("the {} family needs --epsilon", args.family))
    };
    Ok(match args.family {
        SamplerKind::Geometric => SamplerParams::geometric(args.size, seed),
        SamplerKind::Phase => SamplerParams::phase(need_eps()?, args.size, seed),
        SamplerKind::Exponential => SamplerParams::exponential(need_eps()?, args.size, seed),
    })
}

fn cmd_adversary_sample(args: &FamilyStatsArgs, seed: u64, out: &Path) -> Result<Status> {
    let params = family_params(&args.family, seed)?;
    let summary = match lb_statistics(&params, args.samples, args.policy) {
        Ok(s) => s,
        Err(e) => return adversary_status(e),
    };
    write_json(out, "summary.json", &summary)?;
    summary.write_csv(create(out, "samples.csv")?)?;
    println!(
        "{} on {} (size {}, ε = {}), {} draws: flow ratio {:.6} ± {:.6}",
        args.policy,
        params.kind,
        params.size,
        params.epsilon,
        args.samples,
        summary.flow_ratio.mean,
        summary.flow_ratio.half_width
    );
    if let Some(d) = summary.delta_ratio {
        println!("E[δ(τ,1)] / E[δ*(τ)] = {d:.6}");
    }
    Ok(Status::Ok)
}

fn cmd_sample(args: &SampleArgs, seed: u64, out: &Path) -> Result<Status> {
    let params = family_params(&args.family, seed)?;
    for i in 0..args.count as u64 {
        let draw = params.with_seed(seed.wrapping_add(i)).draw()?;
        let name = if args.count == 1 {
            "instance.json".to_string()
        } else {
            format!("instance-{}.json", seed.wrapping_add(i))
        };
        write_text(out, &name, &(draw.instance.to_json() + "\n"))?;
        println!(
            "{}: {} jobs{}",
            out.join(&name).display(),
            draw.instance.jobs.len(),
            draw.horizon
                .map(|h| format!(", horizon {h}"))
                .unwrap_or_default()
        );
    }
    Ok(Status::Ok)
}

fn cmd_sweep(args: &SweepArgs, seed: u64, out: &Path) -> Result<Status> {
    let epsilons: Vec<Option<Rat>> = match args.family {
        SamplerKind::Geometric => vec![None],
        _ if args.epsilons.is_empty() => bail!("the {} family needs --epsilons", args.family),
        _ => args.epsilons.iter().cloned().map(Some).collect(),
    };
    let mut agg = csv::Writer::from_writer(create(out, "sweep.csv")?);
    agg.write_record([
        "family",
        "size",
        "epsilon",
        "policy",
        "samples",
        "mean_ratio",
        "half_width",
        "target",
        "delta_ratio",
    ])?;
    let mut rows = create(out, "sweep_samples.csv")?;
    let mut header = true;
    for &size in &args.sizes {
        for eps in &epsilons {
            let family = FamilyArgs {
                family: args.family,
                size,
                epsilon: eps.clone(),
            };
            let params = family_params(&family, seed)?;
            if args.samples == 0 {
                continue;
            }
            let summary = match lb_statistics(&params, args.samples, args.policy) {
                Ok(s) => s,
                Err(e) => return adversary_status(e),
            };
            agg.write_record([
                params.kind.to_string(),
                size.to_string(),
                params.epsilon.to_string(),
                args.policy.to_string(),
                args.samples.to_string(),
                summary.flow_ratio.mean.to_string(),
                summary.flow_ratio.half_width.to_string(),
                summary.target.map(|t| t.to_string()).unwrap_or_default(),
                summary
                    .delta_ratio
                    .map(|d| d.to_string())
                    .unwrap_or_default(),
            ])?;
            let mut buf = Vec::new();
            summary.write_csv(&mut buf)?;
            let text = String::from_utf8(buf)?;
            let body = if header {
                text.as_str()
            } else {
                text.split_once('\n').map_or("", |(_, rest)| rest)
            };
            header = false;
            std::io::Write::write_all(&mut rows, body.as_bytes())?;
            println!(
                "{} size {size} ε = {}: mean ratio {:.6} ± {:.6}",
                params.kind, params.epsilon, summary.flow_ratio.mean, summary.flow_ratio.half_width
            );
        }
    }
    agg.flush()?;
    Ok(Status::Ok)
}

fn reduction_err(e: ReductionError) -> anyhow::Error {
    anyhow!(e)
}

fn cmd_reduce(args: &ReduceArgs, out: &Path) -> Result<Status> {
    if let Some(path) = &args.jars {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let cfg: WaterFillingConfig =
            serde_json::from_str(&text).with_context(|| format!("in {}", path.display()))?;
        let report = water_filling_dominance(&cfg).map_err(reduction_err)?;
        write_json(out, "water_filling.json", &report)?;
        println!(
            "water filling over {} jars: dominance {} at {} breakpoints",
            cfg.len(),
            if report.holds { "holds" } else { "FAILS" },
            report.checked_times
        );
        if let Some(v) = &report.violation {
            println!(
                "  jar {} at t = {}: {} > {}",
                v.jar, v.t, v.level, v.level_prime
            );
        }
        return Ok(Status::from_pass(report.holds));
    }
    let path = args
        .instance
        .clone()
        .expect("clap requires an instance without --jars");
    let inst = load_instance(&InstanceArgs {
        instance: path,
        epsilon: None,
    })?;
    let eps = args.epsilon.clone().unwrap_or_else(|| inst.epsilon.clone());
    let report = reduction_check(&inst, &eps).map_err(reduction_err)?;
    let corollary = speed_corollary_check(&inst, &eps).map_err(reduction_err)?;
    write_json(
        out,
        "reduction.json",
        &json!({ "chain": report.to_json(), "corollary": corollary }),
    )?;
    let mut w = csv::Writer::from_writer(create(out, "chain.csv")?);
    w.write_record(["t", "setf_fast", "setf_scaled", "setfi", "slf"])?;
    for r in &report.rows {
        w.write_record([
            r.t.to_string(),
            r.setf_fast.to_string(),
            r.setf_scaled.to_string(),
            r.setfi.to_string(),
            r.slf.to_string(),
        ])?;
    }
    w.flush()?;
    let measure: Rat = report.forbidden.iter().map(|(a, b)| b - a).sum();
    println!(
        "ε = {}, δ = {}, |I| = {} over {} intervals, {} event times",
        report.epsilon,
        report.delta,
        measure,
        report.forbidden.len(),
        report.rows.len()
    );
    for link in &report.links {
        println!(
            "{:<18} {}{}",
            link.name,
            if link.holds { "holds" } else { "FAILS" },
            link.detail
                .as_ref()
                .map(|d| format!(" at t = {}: {d}", link.witness.clone().unwrap_or_default()))
                .unwrap_or_default()
        );
    }
    println!(
        "{:<18} {} (SETF at speed 1+ε vs SRPT, bound {}, worst {})",
        "speed_corollary",
        if corollary.holds { "holds" } else { "FAILS" },
        corollary.bound,
        corollary.worst_ratio
    );
    Ok(Status::from_pass(report.holds && corollary.holds))
}
