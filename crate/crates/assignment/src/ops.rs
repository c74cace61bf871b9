//! Constructions on assignments: canonical fill, greedy matching, split,
//! merge, minimal suffixes and unions.

use std::collections::{BTreeMap, BTreeSet};

use eclair_core::{JobId, Rat};

use crate::{default_order, AssignmentError, Graph};

fn positive(v: &[(JobId, Rat)]) -> Vec<(JobId, Rat)> {
    v.iter().filter(|(_, w)| w.is_positive()).cloned().collect()
}

/// The canonical assignment between two remaining-work profiles: both sides
/// in default order, filled north-west corner style (each right vertex takes
/// from the earliest left vertices that still have residual volume).
///
/// Zero entries are ignored; the two totals must agree.
///
/// ```
/// use eclair_assignment::canonical;
/// use eclair_core::Rat;
///
/// let g = canonical(&[(1, Rat::int(3)), (2, Rat::int(2))], &[(1, Rat::int(4)), (2, Rat::int(1))]).unwrap();
/// assert_eq!(g.weight(1, 1), Rat::int(3));
/// assert_eq!(g.weight(2, 1), Rat::int(1));
/// assert_eq!(g.weight(2, 2), Rat::int(1));
/// assert!(g.is_forward());
/// ```
pub fn canonical(alg: &[(JobId, Rat)], opt: &[(JobId, Rat)]) -> Result<Graph, AssignmentError> {
    let alg = positive(alg);
    let opt = positive(opt);
    let total_l: Rat = alg.iter().map(|(_, w)| w).sum();
    let total_r: Rat = opt.iter().map(|(_, w)| w).sum();
    if total_l != total_r {
        return Err(AssignmentError::UnequalTotals(
            Box::new(total_l),
            Box::new(total_r),
        ));
    }
    let left = default_order(&alg);
    let right = default_order(&opt);
    let lv: BTreeMap<JobId, Rat> = alg.into_iter().collect();
    let rv: BTreeMap<JobId, Rat> = opt.into_iter().collect();
    let mut edges = Vec::new();
    let mut li = 0;
    let mut lres = left
        .first()
        .map(|id| lv[id].clone())
        .unwrap_or_else(Rat::zero);
    for r in &right {
        let mut need = rv[r].clone();
        while need.is_positive() {
            let take = Rat::min_of(&need, &lres).clone();
            edges.push((left[li], *r, take.clone()));
            need -= &take;
            lres -= &take;
            if lres.is_zero() && li + 1 < left.len() {
                li += 1;
                lres = lv[&left[li]].clone();
            }
        }
    }
    Graph::new(left, right, edges)
}

/// Greedy matching of a left queue `a` onto a right queue `a_star`, both in
/// the given order. Each right vertex in turn is matched to the shortest
/// suffix of `a` whose residual volume covers its demand: every vertex of that
/// suffix but the first gives all of its residual, the first gives the rest.
///
/// The result keeps the given orders and is backward.
///
/// ```
/// use eclair_assignment::greedy_matching;
/// use eclair_core::Rat;
///
/// let g = greedy_matching(&[(1, Rat::int(2)), (2, Rat::int(2))], &[(1, Rat::int(3)), (2, Rat::int(1))]).unwrap();
/// assert_eq!(g.weight(2, 1), Rat::int(2));
/// assert_eq!(g.weight(1, 1), Rat::int(1));
/// assert_eq!(g.weight(1, 2), Rat::int(1));
/// assert!(g.is_backward());
/// ```
pub fn greedy_matching(
    a: &[(JobId, Rat)],
    a_star: &[(JobId, Rat)],
) -> Result<Graph, AssignmentError> {
    let total_l: Rat = a.iter().map(|(_, w)| w).sum();
    let total_r: Rat = a_star.iter().map(|(_, w)| w).sum();
    if total_l != total_r {
        return Err(AssignmentError::UnequalTotals(
            Box::new(total_l),
            Box::new(total_r),
        ));
    }
    if a.iter().chain(a_star).any(|(_, w)| w.is_negative()) {
        return Err(AssignmentError::NegativeVolume);
    }
    let mut residual: Vec<Rat> = a.iter().map(|(_, w)| w.clone()).collect();
    let mut edges = Vec::new();
    for (v, demand) in a_star {
        if demand.is_zero() {
            continue;
        }
        // Shortest suffix covering the demand.
        let mut acc = Rat::zero();
        let mut front = residual.len();
        while acc < *demand {
            front -= 1;
            acc += &residual[front];
        }
        let mut rest = demand.clone();
        for i in (front + 1..residual.len()).rev() {
            if residual[i].is_positive() {
                let w = std::mem::replace(&mut residual[i], Rat::zero());
                rest -= &w;
                edges.push((a[i].0, *v, w));
            }
        }
        residual[front] -= &rest;
        edges.push((a[front].0, *v, rest));
    }
    Graph::new(
        a.iter().map(|(id, _)| *id).collect(),
        a_star.iter().map(|(id, _)| *id).collect(),
        edges,
    )
}

/// Splits a forward graph into a prefix and a suffix: with edges sorted by
/// their endpoint positions, the suffix takes the last `β` units of weight
/// (cutting the boundary edge if needed) and the prefix keeps the rest. Both
/// parts keep the induced vertex orders and drop isolated vertices.
pub fn split(h: &Graph, beta: &Rat) -> Result<(Graph, Graph), AssignmentError> {
    if !h.is_forward() {
        return Err(AssignmentError::NotForward);
    }
    let total = h.volume();
    if beta.is_negative() || *beta > total {
        return Err(AssignmentError::BadSplit(
            Box::new(beta.clone()),
            Box::new(total),
        ));
    }
    let edges = h.positioned_edges();
    let mut pre = Vec::new();
    let mut suf = Vec::new();
    let mut need = beta.clone();
    for (_, _, l, r, w) in edges.into_iter().rev() {
        if need.is_zero() {
            pre.push((l, r, w));
        } else if w <= need {
            need -= &w;
            suf.push((l, r, w));
        } else {
            let keep = &w - &need;
            suf.push((l, r, std::mem::replace(&mut need, Rat::zero())));
            pre.push((l, r, keep));
        }
    }
    let part = |edges: Vec<(JobId, JobId, Rat)>| {
        Graph::new(h.left().to_vec(), h.right().to_vec(), edges).map(|g| g.pruned())
    };
    Ok((part(pre)?, part(suf)?))
}

/// Merges two assignments on disjoint vertex sets into one forward assignment
/// in default order, by greedily re-matching their combined volumes.
pub fn merge(h1: &Graph, h2: &Graph) -> Result<Graph, AssignmentError> {
    let mut right: Vec<(JobId, Rat)> = h1.right_volumes();
    right.extend(h2.right_volumes());
    merge_ordered(h1, h2, &default_order(&positive(&right)))
}

/// [`merge`] with a prescribed order for the combined right side (a
/// permutation of the right vertices with positive volume). The result is
/// forward with respect to that order.
pub fn merge_ordered(
    h1: &Graph,
    h2: &Graph,
    right_order: &[JobId],
) -> Result<Graph, AssignmentError> {
    for (x, y) in [(h1.left(), h2.left()), (h1.right(), h2.right())] {
        let xs: BTreeSet<JobId> = x.iter().copied().collect();
        if let Some(id) = y.iter().find(|id| xs.contains(id)) {
            return Err(AssignmentError::NotDisjoint(*id));
        }
    }
    let mut left: Vec<(JobId, Rat)> = h1.left_volumes();
    left.extend(h2.left_volumes());
    let mut right: Vec<(JobId, Rat)> = h1.right_volumes();
    right.extend(h2.right_volumes());
    let left = positive(&left);
    let rv: BTreeMap<JobId, Rat> = positive(&right).into_iter().collect();
    let listed: BTreeSet<JobId> = right_order.iter().copied().collect();
    if listed.len() != right_order.len() || listed != rv.keys().copied().collect() {
        return Err(AssignmentError::OrderMismatch);
    }
    // Left side ascending (ties by ascending id), right side as prescribed.
    let mut asc = left.clone();
    asc.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    let desc: Vec<(JobId, Rat)> = right_order.iter().map(|id| (*id, rv[id].clone())).collect();
    let g = greedy_matching(&asc, &desc)?;
    let mut order_l: Vec<JobId> = asc.iter().map(|(id, _)| *id).collect();
    order_l.reverse();
    g.with_orders(order_l, right_order.to_vec())
}

/// The shortest suffix of the left order whose total volume is at least `β`.
pub fn min_suffix(h: &Graph, beta: &Rat) -> Result<Vec<JobId>, AssignmentError> {
    let vols = h.left_volumes();
    let total: Rat = vols.iter().map(|(_, w)| w).sum();
    if *beta > total {
        return Err(AssignmentError::BadSplit(
            Box::new(beta.clone()),
            Box::new(total),
        ));
    }
    let mut acc = Rat::zero();
    let mut start = vols.len();
    while acc < *beta {
        start -= 1;
        acc += &vols[start].1;
    }
    Ok(vols[start..].iter().map(|(id, _)| *id).collect())
}

/// Edge-wise sum of two assignments; vertices are re-sorted into default
/// order of the summed volumes.
pub fn union(h1: &Graph, h2: &Graph) -> Graph {
    let mut left: Vec<JobId> = h1.left().to_vec();
    left.extend(h2.left().iter().filter(|id| !h1.left().contains(id)));
    let mut right: Vec<JobId> = h1.right().to_vec();
    right.extend(h2.right().iter().filter(|id| !h1.right().contains(id)));
    let edges = h1
        .edges()
        .chain(h2.edges())
        .map(|(l, r, w)| (l, r, w.clone()))
        .collect::<Vec<_>>();
    Graph::new(left, right, edges)
        .expect("union of well-formed graphs is well formed")
        .with_default_order()
}
