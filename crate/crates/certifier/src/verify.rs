//! Independent verification of certificates.

use std::collections::BTreeMap;

use eclair_assignment::default_order;
use eclair_core::{ceil_inv, JobId, Rat};
use eclair_sim::Policy;
use serde::Serialize;

use crate::create::Certificate;
use crate::moves::is_early_arriving;
use crate::state::{elapsed_of, remaining, run};

/// Outcome of one verification check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    /// Check name.
    pub name: String,
    /// Whether it passed.
    pub pass: bool,
    /// What was compared.
    pub detail: String,
}

/// Outcome of [`verify_certificate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    /// Target time.
    pub t: Rat,
    /// `|SLF_J(t)|`.
    pub slf_count: usize,
    /// `|OPT_J(t)|`.
    pub opt_count: usize,
    /// Prefix expansion of the assignment.
    pub phi: Rat,
    /// Every check, in order.
    pub checks: Vec<CheckResult>,
    /// `true` if every check passed.
    pub pass: bool,
}

/// Re-simulates SLF and SRPT on both instances and checks, without trusting
/// the construction:
///
/// * `marginals`: the assignment's vertex volumes equal the remaining work of
///   SLF and SRPT on the transformed instance at `t`, and both sides are in
///   the default order of those remaining values;
/// * `validity`: the prefix expansion is at most `⌈1/ε⌉`;
/// * `t_equivalence`: the transformed instance only moves releases of jobs
///   released before `t` earlier, and SLF's state at `t` is the same on both;
/// * `opt_not_worse`: `|OPT_{J′}(t)| ≤ |OPT_J(t)|`;
/// * `bounded_degree`: `|SLF_{J′}(t)| ≤ ⌈1/ε⌉·|OPT_{J′}(t)|` and hence
///   `|SLF_J(t)| ≤ ⌈1/ε⌉·|OPT_J(t)|`.
pub fn verify_certificate(cert: &Certificate) -> VerificationReport {
    let t = &cert.target_time;
    let eps = &cert.original.epsilon;
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(CheckResult {
            name: name.into(),
            pass,
            detail,
        })
    };
    let sims = (
        run(&cert.original, Policy::Slf, t),
        run(&cert.original, Policy::Srpt, t),
        run(&cert.transformed, Policy::Slf, t),
        run(&cert.transformed, Policy::Srpt, t),
    );
    let (Ok(slf), Ok(opt), Ok(slf_p), Ok(opt_p)) = sims else {
        push(
            "simulation",
            false,
            "the instances could not be simulated".into(),
        );
        return VerificationReport {
            t: t.clone(),
            slf_count: 0,
            opt_count: 0,
            phi: cert.assignment.phi.clone(),
            pass: false,
            checks,
        };
    };
    let g = &cert.assignment.graph;
    let bound = if eps.is_positive() {
        ceil_inv(eps)
    } else {
        i64::MAX
    };

    let st = slf_p.state_at(t);
    let st_star = opt_p.state_at(t);
    let (want_l, want_r) = (remaining(&st), remaining(&st_star));
    let got_l: BTreeMap<JobId, Rat> = g.left_volumes().into_iter().collect();
    let got_r: BTreeMap<JobId, Rat> = g.right_volumes().into_iter().collect();
    let ordered = g.left() == default_order(&g.left_volumes()).as_slice()
        && g.right() == default_order(&g.right_volumes()).as_slice();
    push(
        "marginals",
        got_l == want_l && got_r == want_r && ordered,
        format!(
            "left volumes match: {}, right volumes match: {}, default order: {ordered}",
            got_l == want_l,
            got_r == want_r
        ),
    );

    let phi = g.prefix_expansion();
    push(
        "validity",
        phi <= Rat::int(bound) && phi == cert.assignment.phi,
        format!("φ = {phi} (stated {}), bound {bound}", cert.assignment.phi),
    );

    let early = is_early_arriving(&cert.original, &cert.transformed, t);
    let same = elapsed_of(&slf.state_at(t)) == elapsed_of(&st);
    push(
        "t_equivalence",
        early && same,
        format!("early-arriving: {early}, equal SLF states at t: {same}"),
    );

    let (n_opt, n_opt_p) = (opt.active_count(t), opt_p.active_count(t));
    push(
        "opt_not_worse",
        n_opt_p <= n_opt,
        format!("|OPT_J′(t)| = {n_opt_p}, |OPT_J(t)| = {n_opt}"),
    );

    let (n_slf, n_slf_p) = (slf.active_count(t), slf_p.active_count(t));
    let cap = |n: usize| (n as i128) * (bound as i128);
    push(
        "bounded_degree",
        (n_slf_p as i128) <= cap(n_opt_p) && (n_slf as i128) <= cap(n_opt),
        format!("|SLF_J′(t)| = {n_slf_p}, |SLF_J(t)| = {n_slf}, bound {bound}·|OPT|"),
    );

    let pass = checks.iter().all(|c| c.pass);
    VerificationReport {
        t: t.clone(),
        slf_count: n_slf,
        opt_count: n_opt,
        phi,
        checks,
        pass,
    }
}
