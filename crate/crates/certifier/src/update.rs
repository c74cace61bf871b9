//! Turning the canonical assignment at `s` into a valid assignment at `ℓ`
//! after a batch of new jobs has been processed.

use std::collections::{BTreeMap, BTreeSet};

use eclair_assignment::{
    default_order, greedy_matching, merge_ordered, min_suffix, split, union, AssignmentError, Graph,
};
use eclair_core::{ceil_inv, Instance, JobId, Rat};
use eclair_sim::Policy;
use serde::Serialize;

use crate::split::{work_split, WorkSplit};
use crate::state::{check_input, run};
use crate::CertifierError;

/// Which of the two update procedures ran.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `ν ≤ ν*`: SRPT did at least as much work on old jobs as SLF.
    Update1,
    /// `ν* < ν`.
    Update2,
}

/// The result of an update step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateOutcome {
    /// The assignment at `ℓ` (default order, isolated vertices removed).
    pub graph: Graph,
    /// The branch taken.
    pub branch: Branch,
    /// The work split the update was based on.
    pub split: WorkSplit,
}

fn graph_err(step: &str) -> impl Fn(AssignmentError) -> CertifierError + '_ {
    move |e| CertifierError::claim(&format!("update.{step}"), e.to_string())
}

/// Diagonal matching with the given weights, in the default order.
fn matching(weights: &BTreeMap<JobId, Rat>, ids: &BTreeSet<JobId>) -> Graph {
    let w: Vec<(JobId, Rat)> = ids.iter().map(|id| (*id, weights[id].clone())).collect();
    Graph::perfect_matching(&w)
}

/// Queue of `(id, demand)` sorted by the default order of `key`.
fn queue(
    ids: impl IntoIterator<Item = (JobId, Rat)>,
    key: &BTreeMap<JobId, Rat>,
) -> Vec<(JobId, Rat)> {
    let demands: BTreeMap<JobId, Rat> = ids.into_iter().collect();
    let keyed: Vec<(JobId, Rat)> = demands
        .keys()
        .map(|id| (*id, key.get(id).cloned().unwrap_or_else(Rat::zero)))
        .collect();
    default_order(&keyed)
        .into_iter()
        .map(|id| (id, demands[&id].clone()))
        .collect()
}

/// Updates the canonical assignment `sigma` at `s` (over the jobs released
/// before `s`) to an assignment at `ℓ` over the jobs released by `s`, where
/// `j_new` is the batch released at `s`.
///
/// The batch enters as a perfect matching of its sizes; the common work `Δ`
/// is removed from it, the common SRPT-like work `min(ν, ν*)` is split off
/// the old assignment, and the excess work of either schedule is repaired by
/// a greedy matching. The five marginal properties of the result, its
/// marginals against the simulated states and its validity are checked.
///
/// ```
/// use eclair_assignment::Graph;
/// use eclair_certifier::update_valid_assignment;
/// use eclair_core::{Instance, Rat};
///
/// let toy = Instance::simultaneous(Rat::new(1, 2), &[5, 4, 3, 3, 2, 1]);
/// let out = update_valid_assignment(&toy, &(1..=6).collect(), &Rat::zero(), &Rat::int(9), &Graph::empty()).unwrap();
/// assert_eq!(out.graph.weight(3, 1), Rat::new(3, 2));
/// assert_eq!(out.graph.prefix_expansion(), Rat::int(2));
/// ```
pub fn update_valid_assignment(
    inst: &Instance,
    j_new: &BTreeSet<JobId>,
    s: &Rat,
    ell: &Rat,
    sigma: &Graph,
) -> Result<UpdateOutcome, CertifierError> {
    check_input(inst)?;
    if inst.epsilon == Rat::one() {
        return Err(CertifierError::Input("the update needs epsilon < 1".into()));
    }
    let slf = run(inst, Policy::Slf, ell)?;
    let opt = run(inst, Policy::Srpt, ell)?;
    let ws = work_split(inst, &slf, &opt, s, ell, j_new)?;
    update_from(ws, sigma)
}

pub(crate) fn update_from(ws: WorkSplit, sigma: &Graph) -> Result<UpdateOutcome, CertifierError> {
    // σ must describe the old jobs at s.
    let lv: BTreeMap<JobId, Rat> = sigma
        .left_volumes()
        .into_iter()
        .filter(|(_, v)| v.is_positive())
        .collect();
    let rv: BTreeMap<JobId, Rat> = sigma
        .right_volumes()
        .into_iter()
        .filter(|(_, v)| v.is_positive())
        .collect();
    if lv != ws.old_remaining || rv != ws.old_remaining_star {
        return Err(CertifierError::claim(
            "update.input_marginals",
            "σ does not match the remaining work of the old jobs at s",
        ));
    }
    let batch = ws.batch();
    let h1 = sigma.clone();
    let m1 = matching(&ws.sizes, &batch);
    let mut m2w = ws.sizes.clone();
    for (id, d) in &ws.delta {
        *m2w.get_mut(id).expect("batch job") -= d;
    }
    let common = Rat::min_of(&ws.nu, &ws.nu_star).clone();
    let (h2, _) = split(&h1, &common).map_err(graph_err("split_common"))?;

    let (graph, branch) = if ws.nu <= ws.nu_star {
        (update1(&ws, &h2, &m2w)?, Branch::Update1)
    } else {
        (update2(&ws, &h2, &m2w)?, Branch::Update2)
    };
    let graph = graph.pruned().with_default_order();
    check_properties(&ws, &h1, &m1, &graph)?;
    let out_l: BTreeMap<JobId, Rat> = graph.left_volumes().into_iter().collect();
    let out_r: BTreeMap<JobId, Rat> = graph.right_volumes().into_iter().collect();
    let want_l: BTreeMap<JobId, Rat> = ws.remaining_ell.clone();
    let want_r: BTreeMap<JobId, Rat> = ws.remaining_ell_star.clone();
    if out_l != want_l || out_r != want_r {
        return Err(CertifierError::claim(
            "update.marginals",
            "the updated assignment does not match the remaining work at ℓ",
        ));
    }
    let bound = Rat::int(ceil_inv(&ws.epsilon));
    let phi = graph.prefix_expansion();
    if phi > bound {
        return Err(CertifierError::claim(
            "update.validity",
            format!("prefix expansion {phi} exceeds {bound}"),
        ));
    }
    Ok(UpdateOutcome {
        graph,
        branch,
        split: ws,
    })
}

fn update1(
    ws: &WorkSplit,
    h2: &Graph,
    m2w: &BTreeMap<JobId, Rat>,
) -> Result<Graph, CertifierError> {
    let ms2 = matching(m2w, &ws.a_plus);
    let md2 = matching(m2w, &ws.d_ell);
    // The right side follows SRPT's priority at s (remaining work at s), so
    // that the suffix split off below is exactly the work SRPT performed.
    let mut at_s: Vec<(JobId, Rat)> = h2
        .right_volumes()
        .into_iter()
        .map(|(id, _)| (id, ws.old_remaining_star[&id].clone()))
        .collect();
    at_s.extend(ws.a_plus.iter().map(|id| (*id, ws.sizes[id].clone())));
    let h3 = merge_ordered(h2, &ms2, &default_order(&at_s)).map_err(graph_err("merge"))?;
    let big_t: Rat = ws.o_plus.iter().map(|id| ws.tau[id].clone()).sum();
    if big_t > h3.volume() {
        return Err(CertifierError::claim(
            "update1.claim_x",
            format!("no suffix of V(H3) has volume {big_t}"),
        ));
    }
    let x = min_suffix(&h3, &big_t).map_err(graph_err("min_suffix"))?;
    let mut m3w = m2w.clone();
    for id in &ws.o_plus {
        *m3w.get_mut(id).expect("batch job") -= &ws.tau[id];
    }
    let m3 = matching(&m3w, &ws.o_plus);
    let (h3p, h3s) = split(&h3, &big_t).map_err(graph_err("split_t"))?;
    if h3s.left() != x.as_slice() {
        return Err(CertifierError::claim(
            "update1.claim_x",
            "the split suffix differs from the minimal suffix X",
        ));
    }
    let left = h3s.left_volumes();
    let right = queue(
        ws.o_plus.iter().map(|id| (*id, ws.tau[id].clone())),
        &ws.remaining_ell_star,
    );
    let g = greedy_matching(&left, &right).map_err(graph_err("greedy"))?;
    let ratio = &ws.epsilon / (Rat::one() - &ws.epsilon);
    let floor = &ratio * &ws.gamma;
    for id in x.iter().skip(1) {
        if g.vol(*id) < floor {
            return Err(CertifierError::claim(
                "update1.volume_bound",
                format!("vol_G({id}) = {} is below εγ/(1−ε) = {floor}", g.vol(*id)),
            ));
        }
    }
    Ok(union(&union(&union(&g, &m3), &h3p), &md2))
}

fn update2(
    ws: &WorkSplit,
    h2: &Graph,
    m2w: &BTreeMap<JobId, Rat>,
) -> Result<Graph, CertifierError> {
    if !ws.o_ell.is_subset(&ws.a_ell) {
        return Err(CertifierError::claim(
            "update2.o_subset_a",
            "O_ℓ ⊄ A_ℓ although ν* < ν",
        ));
    }
    if ws.tau_total() >= ws.tau_star_total() {
        return Err(CertifierError::claim(
            "update2.tau_order",
            format!(
                "τ(J_new) = {} is not below τ*(J_new) = {}",
                ws.tau_total(),
                ws.tau_star_total()
            ),
        ));
    }
    let d = &ws.nu - &ws.nu_star;
    // X: a suffix of V(H2) with volume exactly d.
    let lvols = h2.left_volumes();
    let mut acc = Rat::zero();
    let mut exact = d.is_zero();
    for (_, v) in lvols.iter().rev() {
        acc += v;
        if acc == d {
            exact = true;
        }
        if acc >= d {
            break;
        }
    }
    if !exact {
        return Err(CertifierError::claim(
            "update2.claim_x",
            format!("no suffix of V(H2) has volume exactly {d}"),
        ));
    }
    if d > h2.volume() {
        return Err(CertifierError::claim(
            "update2.claim_y",
            format!("no suffix of V*(H2) has volume {d}"),
        ));
    }
    let mut m3w = m2w.clone();
    for id in &ws.o_plus {
        *m3w.get_mut(id).expect("batch job") -= &ws.tau[id];
    }
    for id in &ws.a_plus {
        *m3w.get_mut(id).expect("batch job") -= &ws.tau_star[id];
    }
    let m3 = matching(&m3w, &ws.batch());
    let (h2p, h2s) = split(h2, &d).map_err(graph_err("split_d"))?;
    let left = queue(
        ws.a_plus.iter().map(|id| (*id, ws.tau_star[id].clone())),
        &ws.remaining_ell,
    );
    let right = queue(
        ws.o_plus
            .iter()
            .map(|id| (*id, ws.tau[id].clone()))
            .chain(h2s.right_volumes()),
        &ws.remaining_ell_star,
    );
    let g = greedy_matching(&left, &right).map_err(graph_err("greedy"))?;
    Ok(union(&union(&g, &m3), &h2p))
}

fn check_properties(
    ws: &WorkSplit,
    h1: &Graph,
    m1: &Graph,
    out: &Graph,
) -> Result<(), CertifierError> {
    let fail =
        |n: u8, detail: String| CertifierError::claim(&format!("update.property{n}"), detail);
    for id in ws.sizes.keys() {
        let lost = m1.vol(*id) - out.vol(*id);
        if lost != &ws.delta[id] + &ws.tau[id] {
            return Err(fail(1, format!("new job {id} lost {lost} of SLF volume")));
        }
        let lost = m1.vol_star(*id) - out.vol_star(*id);
        if lost != &ws.delta[id] + &ws.tau_star[id] {
            return Err(fail(4, format!("new job {id} lost {lost} of SRPT volume")));
        }
    }
    let finished: BTreeSet<JobId> = ws.known_s.difference(&ws.known_ell).copied().collect();
    for id in h1.left() {
        let lost = h1.vol(*id) - out.vol(*id);
        if finished.contains(id) {
            if lost != ws.old_remaining[id] {
                return Err(fail(2, format!("completed job {id} lost {lost}, not r(s)")));
            }
        } else if !lost.is_zero() {
            return Err(fail(
                3,
                format!("old job {id} changed SLF volume by {lost}"),
            ));
        }
    }
    for id in h1.right() {
        let lost = h1.vol_star(*id) - out.vol_star(*id);
        let r_ell = ws
            .remaining_ell_star
            .get(id)
            .cloned()
            .unwrap_or_else(Rat::zero);
        if lost != &ws.old_remaining_star[id] - &r_ell {
            return Err(fail(5, format!("old job {id} lost {lost} of SRPT volume")));
        }
    }
    Ok(())
}
