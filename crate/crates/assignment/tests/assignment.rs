use std::collections::BTreeSet;

use eclair_assignment::{
    canonical, default_order, greedy_matching, merge, merge_ordered, min_suffix, split, union,
    AssignmentChecked, AssignmentError, Graph, GraphDoc,
};
use eclair_core::Rat;
use proptest::prelude::*;

fn r(n: i64) -> Rat {
    Rat::int(n)
}

fn toy_final() -> Graph {
    Graph::new(
        vec![1, 2, 3, 4],
        vec![1, 2],
        vec![
            (1, 1, Rat::new(7, 2)),
            (2, 2, Rat::new(5, 2)),
            (3, 1, Rat::new(3, 2)),
            (4, 2, Rat::new(3, 2)),
        ],
    )
    .unwrap()
    .with_default_order()
}

#[test]
fn canonical_small_example() {
    // The two reference jobs tie, so the higher id comes first on the right.
    let g = canonical(&[(1, r(3)), (2, r(1))], &[(1, r(2)), (2, r(2))]).unwrap();
    assert_eq!(g.right(), &[2, 1]);
    assert_eq!(g.edge_count(), 3);
    assert_eq!(g.weight(1, 2), r(2));
    assert_eq!(g.weight(1, 1), r(1));
    assert_eq!(g.weight(2, 1), r(1));
    // Without the tie the fill follows the volumes.
    let g = canonical(&[(1, r(3)), (2, r(1))], &[(1, r(3)), (2, r(1))]).unwrap();
    assert_eq!(g, Graph::perfect_matching(&[(1, r(3)), (2, r(1))]));
    let toy: Vec<(u64, Rat)> = [5, 4, 3, 3, 2, 1]
        .iter()
        .enumerate()
        .map(|(i, p)| (i as u64 + 1, r(*p)))
        .collect();
    assert_eq!(
        canonical(&toy, &toy).unwrap(),
        Graph::perfect_matching(&toy)
    );
    assert!(g.is_forward());
    assert_eq!(g.prefix_expansion(), r(1));
}

#[test]
fn canonical_rejects_unequal_totals() {
    let err = canonical(&[(1, r(3))], &[(1, r(2))]).unwrap_err();
    assert_eq!(
        err,
        AssignmentError::UnequalTotals(Box::new(r(3)), Box::new(r(2)))
    );
}

#[test]
fn greedy_small_example() {
    let g = greedy_matching(&[(1, r(2)), (2, r(2))], &[(1, r(3)), (2, r(1))]).unwrap();
    assert_eq!(g.weight(2, 1), r(2));
    assert_eq!(g.weight(1, 1), r(1));
    assert_eq!(g.weight(1, 2), r(1));
    assert_eq!(g.edge_count(), 3);
    assert!(g.is_backward());
    assert!(!g.is_forward());
}

#[test]
fn toy_final_assignment_expansion() {
    let g = toy_final();
    assert_eq!(g.left(), &[1, 2, 4, 3]);
    assert_eq!(g.right(), &[1, 2]);
    assert_eq!(g.prefix_expansion(), r(2));
    let checked = AssignmentChecked::check(g, &Rat::new(1, 2));
    assert!(checked.valid);
    let tight = AssignmentChecked::check(checked.graph, &Rat::one());
    assert!(!tight.valid);
}

#[test]
fn default_order_breaks_ties_by_descending_id() {
    assert_eq!(
        default_order(&[(1, r(2)), (2, r(2)), (3, r(5))]),
        vec![3, 2, 1]
    );
}

#[test]
fn forward_and_backward_on_crossing_pairs() {
    let cross = Graph::new(vec![1, 2], vec![1, 2], vec![(1, 2, r(1)), (2, 1, r(1))]).unwrap();
    assert!(!cross.is_forward());
    assert!(cross.is_backward());
    let parallel = Graph::new(vec![1, 2], vec![1, 2], vec![(1, 1, r(1)), (2, 2, r(1))]).unwrap();
    assert!(parallel.is_forward());
    assert!(!parallel.is_backward());
    // Edges sharing a vertex are both forward and backward.
    let star = Graph::new(vec![1, 2], vec![1], vec![(1, 1, r(1)), (2, 1, r(1))]).unwrap();
    assert!(star.is_forward() && star.is_backward());
}

#[test]
fn split_cuts_the_boundary_edge() {
    let g = canonical(&[(1, r(3)), (2, r(1))], &[(1, r(2)), (2, r(2))]).unwrap();
    let (p, s) = split(&g, &Rat::new(3, 2)).unwrap();
    assert_eq!(s.volume(), Rat::new(3, 2));
    assert_eq!(s.weight(2, 1), r(1));
    assert_eq!(s.weight(1, 1), Rat::new(1, 2));
    assert_eq!(p.weight(1, 2), r(2));
    assert_eq!(p.weight(1, 1), Rat::new(1, 2));
    assert_eq!(p.right(), &[2, 1]);
    let (p0, s0) = split(&g, &Rat::zero()).unwrap();
    assert_eq!((p0, s0.edge_count()), (g.clone(), 0));
    let (pa, sa) = split(&g, &r(4)).unwrap();
    assert_eq!((pa.edge_count(), sa), (0, g.clone()));
    assert_eq!(s.left(), &[1, 2]);
    assert!(matches!(
        split(&g, &r(5)),
        Err(AssignmentError::BadSplit(..))
    ));
    let cross = Graph::new(vec![1, 2], vec![1, 2], vec![(1, 2, r(1)), (2, 1, r(1))]).unwrap();
    assert_eq!(split(&cross, &r(1)), Err(AssignmentError::NotForward));
}

#[test]
fn merge_requires_disjoint_sides() {
    let a = Graph::perfect_matching(&[(1, r(1))]);
    assert_eq!(merge(&a, &a), Err(AssignmentError::NotDisjoint(1)));
}

#[test]
fn merge_of_two_matchings() {
    let a = Graph::perfect_matching(&[(1, r(3))]);
    let b = Graph::new(vec![2], vec![3], vec![(2, 3, r(1))]).unwrap();
    let m = merge(&a, &b).unwrap();
    assert_eq!(m.left(), &[1, 2]);
    assert_eq!(m.right(), &[1, 3]);
    assert!(m.is_forward());
    assert_eq!(m.weight(1, 1), r(3));
    assert_eq!(m.weight(2, 3), r(1));
}

#[test]
fn merge_with_prescribed_right_order() {
    let a = Graph::perfect_matching(&[(1, r(3))]);
    let b = Graph::new(vec![2], vec![3], vec![(2, 3, r(1))]).unwrap();
    // Right side listed against its volume order: the largest left vertex
    // is matched to the right vertices in the prescribed order.
    let m = merge_ordered(&a, &b, &[3, 1]).unwrap();
    assert_eq!(m.left(), &[1, 2]);
    assert_eq!(m.right(), &[3, 1]);
    assert_eq!(m.weight(1, 3), r(1));
    assert_eq!(m.weight(1, 1), r(2));
    assert_eq!(m.weight(2, 1), r(1));
    assert!(m.is_forward());
    assert_eq!(
        merge_ordered(&a, &b, &[3]),
        Err(AssignmentError::OrderMismatch)
    );
    assert_eq!(
        merge_ordered(&a, &b, &[3, 1, 1]),
        Err(AssignmentError::OrderMismatch)
    );
    assert_eq!(
        merge_ordered(&a, &a, &[1]),
        Err(AssignmentError::NotDisjoint(1))
    );
}

#[test]
fn min_suffix_and_union() {
    let g = toy_final();
    assert_eq!(min_suffix(&g, &Rat::zero()).unwrap(), Vec::<u64>::new());
    assert_eq!(min_suffix(&g, &r(3)).unwrap(), vec![4, 3]);
    assert_eq!(min_suffix(&g, &Rat::new(31, 10)).unwrap(), vec![2, 4, 3]);
    let u = union(&g, &Graph::perfect_matching(&[(5, r(9))]));
    assert_eq!(u.left()[0], 5);
    assert_eq!(u.volume(), r(18));
    let twice = union(&g, &g);
    assert_eq!(twice.weight(1, 1), r(7));
}

#[test]
fn reduce_edge_drops_zero_and_rejects_overdraw() {
    let mut g = Graph::perfect_matching(&[(1, r(2))]);
    g.reduce_edge(1, 1, &r(1)).unwrap();
    assert_eq!(g.weight(1, 1), r(1));
    assert!(g.reduce_edge(1, 1, &r(2)).is_err());
    let mut g = Graph::perfect_matching(&[(1, r(2))]);
    g.reduce_edge(1, 1, &r(2)).unwrap();
    assert_eq!(g.edge_count(), 0);
    assert_eq!(g.prefix_expansion(), Rat::zero());
}

#[test]
fn json_round_trip_and_tamper_detection() {
    let g = toy_final();
    let json = serde_json::to_string(&g.to_doc()).unwrap();
    assert!(json.starts_with(r#"{"left":[{"id":1,"vol":"7/2"}"#));
    let doc: GraphDoc = serde_json::from_str(&json).unwrap();
    assert_eq!(Graph::from_doc(&doc).unwrap(), g);
    let mut bad = doc.clone();
    bad.edges[0].w = r(4);
    assert_eq!(Graph::from_doc(&bad), Err(AssignmentError::VolumeMismatch));
    let mut dangling = doc;
    dangling.edges[0].r = 9;
    assert_eq!(
        Graph::from_doc(&dangling),
        Err(AssignmentError::DanglingEdge(1, 9))
    );
}

#[test]
fn construction_errors() {
    assert_eq!(
        Graph::new(vec![1, 1], vec![], vec![]),
        Err(AssignmentError::DuplicateVertex(1))
    );
    assert_eq!(
        Graph::new(vec![1], vec![1], vec![(1, 1, r(-1))]),
        Err(AssignmentError::NegativeWeight(1, 1))
    );
}

// ---------------------------------------------------------------- properties

fn arb_profile(max: usize, base: u64) -> impl Strategy<Value = Vec<(u64, Rat)>> {
    prop::collection::vec((1i64..9, 1i64..4), 1..=max).prop_map(move |v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (n, d))| (base + i as u64, Rat::new(n, d)))
            .collect()
    })
}

type Profile = Vec<(u64, Rat)>;

/// Two profiles with equal totals: the second is rescaled to match the first.
fn arb_pair(max: usize) -> impl Strategy<Value = (Profile, Profile)> {
    (arb_profile(max, 1), arb_profile(max, 1)).prop_map(|(a, b)| {
        let ta: Rat = a.iter().map(|(_, w)| w).sum();
        let tb: Rat = b.iter().map(|(_, w)| w).sum();
        let f = &ta / &tb;
        (a, b.into_iter().map(|(id, w)| (id, w * &f)).collect())
    })
}

fn marginals_match(g: &Graph, a: &[(u64, Rat)], b: &[(u64, Rat)]) -> bool {
    a.iter().all(|(id, w)| g.vol(*id) == *w) && b.iter().all(|(id, w)| g.vol_star(*id) == *w)
}

/// Prefix expansion from a dense adjacency matrix, independent of the graph's
/// own bookkeeping.
fn phi_oracle(g: &Graph) -> Rat {
    let g = g.pruned();
    let left = g.left().to_vec();
    let right = g.right().to_vec();
    let adj: Vec<Vec<bool>> = left
        .iter()
        .map(|l| {
            right
                .iter()
                .map(|r| g.weight(*l, *r).is_positive())
                .collect()
        })
        .collect();
    let mut best = Rat::zero();
    for k in 1..=right.len() {
        let n = (0..left.len())
            .filter(|&i| (0..k).any(|j| adj[i][j]))
            .count();
        best = Rat::max_of(&best, &Rat::new(n as i64, k as i64)).clone();
    }
    best
}

/// Forwardness by checking every pair of edges.
fn forward_oracle(g: &Graph) -> bool {
    let pos = |v: &[u64], x: u64| v.iter().position(|y| *y == x).unwrap();
    let e: Vec<(usize, usize)> = g
        .edges()
        .map(|(l, r, _)| (pos(g.left(), l), pos(g.right(), r)))
        .collect();
    e.iter()
        .all(|a| e.iter().all(|b| !(a.0 > b.0 && a.1 < b.1)))
}

fn backward_oracle(g: &Graph) -> bool {
    let pos = |v: &[u64], x: u64| v.iter().position(|y| *y == x).unwrap();
    let e: Vec<(usize, usize)> = g
        .edges()
        .map(|(l, r, _)| (pos(g.left(), l), pos(g.right(), r)))
        .collect();
    e.iter()
        .all(|a| e.iter().all(|b| !(a.0 < b.0 && a.1 < b.1)))
}

/// North-west fill under orders permuted by a simple deterministic shuffle.
fn shuffled_fill(a: &[(u64, Rat)], b: &[(u64, Rat)], sl: u64, sr: u64) -> Graph {
    fn shuffle(v: &[(u64, Rat)], mut seed: u64) -> Vec<(u64, Rat)> {
        let mut v = v.to_vec();
        for i in (1..v.len()).rev() {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            v.swap(i, (seed >> 33) as usize % (i + 1));
        }
        v
    }
    let (a, b) = (shuffle(a, sl), shuffle(b, sr));
    let mut edges = Vec::new();
    let (mut i, mut res) = (0, a[0].1.clone());
    for (id, w) in &b {
        let mut need = w.clone();
        while need.is_positive() {
            let take = Rat::min_of(&need, &res).clone();
            edges.push((a[i].0, *id, take.clone()));
            need -= &take;
            res -= &take;
            if res.is_zero() && i + 1 < a.len() {
                i += 1;
                res = a[i].1.clone();
            }
        }
    }
    Graph::new(
        a.iter().map(|x| x.0).collect(),
        b.iter().map(|x| x.0).collect(),
        edges,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_is_a_forward_tree((a, b) in arb_pair(7)) {
        let g = canonical(&a, &b).unwrap();
        prop_assert!(marginals_match(&g, &a, &b));
        prop_assert!(g.is_forward());
        prop_assert!(forward_oracle(&g));
        prop_assert!(g.edge_count() < a.len() + b.len());
        prop_assert_eq!(g.left().to_vec(), default_order(&a));
        prop_assert_eq!(g.right().to_vec(), default_order(&b));
    }

    /// No assignment with the same marginals has a smaller prefix expansion
    /// than the canonical one (orders fixed to the default order).
    #[test]
    fn canonical_minimises_expansion(
        (a, b) in arb_pair(5),
        seeds in prop::collection::vec((any::<u64>(), any::<u64>()), 1..6),
    ) {
        let g = canonical(&a, &b).unwrap();
        let phi = g.prefix_expansion();
        for (sl, sr) in seeds {
            let other = shuffled_fill(&a, &b, sl, sr)
                .with_orders(default_order(&a), default_order(&b))
                .unwrap();
            prop_assert!(phi <= other.prefix_expansion(), "canonical {} vs {}", phi, other.prefix_expansion());
        }
    }

    #[test]
    fn valid_assignments_have_bounded_degree(
        (a, b) in arb_pair(6),
        seeds in prop::collection::vec((any::<u64>(), any::<u64>()), 1..4),
        k in 1i64..4,
    ) {
        let eps = Rat::new(1, k);
        for (sl, sr) in seeds {
            let g = shuffled_fill(&a, &b, sl, sr)
                .with_orders(default_order(&a), default_order(&b))
                .unwrap();
            let checked = AssignmentChecked::check(g, &eps);
            if checked.valid {
                let g = checked.graph.pruned();
                prop_assert!(g.left().len() as i64 <= k * g.right().len() as i64);
            }
        }
    }

    #[test]
    fn greedy_is_backward_with_exact_marginals((a, b) in arb_pair(7)) {
        let g = greedy_matching(&a, &b).unwrap();
        prop_assert!(marginals_match(&g, &a, &b));
        prop_assert!(g.is_backward());
        prop_assert!(backward_oracle(&g));
        prop_assert!(g.edge_count() < a.len() + b.len());
    }

    #[test]
    fn predicates_agree_with_pairwise_oracles(
        edges in prop::collection::vec((1u64..5, 1u64..5, 1i64..4), 0..8),
    ) {
        let g = Graph::new(vec![3, 1, 4, 2], vec![2, 4, 1, 3], edges.iter().map(|(l, r, w)| (*l, *r, Rat::int(*w)))).unwrap();
        prop_assert_eq!(g.is_forward(), forward_oracle(&g));
        prop_assert_eq!(g.is_backward(), backward_oracle(&g));
        prop_assert_eq!(g.prefix_expansion(), phi_oracle(&g));
    }

    #[test]
    fn split_partitions_the_weight((a, b) in arb_pair(6), num in 0i64..=16) {
        let g = canonical(&a, &b).unwrap();
        let beta = g.volume() * Rat::new(num, 16);
        let (p, s) = split(&g, &beta).unwrap();
        prop_assert_eq!(s.volume(), beta.clone());
        prop_assert_eq!(p.volume() + s.volume(), g.volume());
        for (l, r, w) in g.edges() {
            prop_assert_eq!(p.weight(l, r) + s.weight(l, r), w.clone());
        }
        prop_assert!(p.is_forward() && s.is_forward());
        prop_assert!(p.prefix_expansion() <= g.prefix_expansion());
        let shared = p.edges().filter(|(l, r, _)| s.weight(*l, *r).is_positive()).count();
        prop_assert!(shared <= 1);
        // Every suffix edge sits no earlier than every prefix edge.
        let pos = |v: &[u64], x: u64| v.iter().position(|y| *y == x).unwrap();
        let key = |l: u64, r: u64| (pos(g.left(), l), pos(g.right(), r));
        for (pl, pr, _) in p.edges() {
            for (sl, sr, _) in s.edges() {
                prop_assert!(key(pl, pr) <= key(sl, sr));
            }
        }
    }

    #[test]
    fn merge_is_forward_and_volume_preserving((a, b) in arb_pair(5), (c, d) in arb_pair(5)) {
        let g1 = canonical(&a, &b).unwrap();
        let shift = |v: &[(u64, Rat)]| v.iter().map(|(id, w)| (id + 100, w.clone())).collect::<Vec<_>>();
        let g2 = greedy_matching(&shift(&c), &shift(&d)).unwrap();
        let m = merge(&g1, &g2).unwrap();
        prop_assert!(m.is_forward());
        prop_assert!(forward_oracle(&m));
        let left: Vec<_> = g1.left_volumes().into_iter().chain(g2.left_volumes()).collect();
        let right: Vec<_> = g1.right_volumes().into_iter().chain(g2.right_volumes()).collect();
        prop_assert!(marginals_match(&m, &left, &right));
        prop_assert_eq!(m.left().to_vec(), default_order(&left));
        prop_assert_eq!(m.right().to_vec(), default_order(&right));
    }

    #[test]
    fn min_suffix_is_minimal((a, b) in arb_pair(7), num in 0i64..=16) {
        let g = canonical(&a, &b).unwrap();
        let beta = g.volume() * Rat::new(num, 16);
        let s = min_suffix(&g, &beta).unwrap();
        let vol = |ids: &[u64]| ids.iter().map(|id| g.vol(*id)).sum::<Rat>();
        prop_assert!(vol(&s) >= beta);
        if !s.is_empty() {
            prop_assert!(vol(&s[1..]) < beta);
        }
        let n = g.left().len();
        prop_assert_eq!(s.as_slice(), &g.left()[n - s.len()..]);
    }

    #[test]
    fn expansion_is_at_least_one_and_at_most_left_size((a, b) in arb_pair(7)) {
        let g = greedy_matching(&a, &b).unwrap();
        let phi = g.prefix_expansion();
        prop_assert!(phi >= Rat::one());
        prop_assert!(phi <= Rat::from(g.left().len()));
        prop_assert_eq!(phi, phi_oracle(&g));
    }

    #[test]
    fn union_adds_weights((a, b) in arb_pair(5), (c, d) in arb_pair(5)) {
        let g1 = canonical(&a, &b).unwrap();
        let g2 = canonical(&c, &d).unwrap();
        let u = union(&g1, &g2);
        prop_assert_eq!(u.volume(), g1.volume() + g2.volume());
        let ids: BTreeSet<u64> = a.iter().chain(&c).map(|(id, _)| *id).collect();
        for id in ids {
            prop_assert_eq!(u.vol(id), g1.vol(id) + g2.vol(id));
        }
        prop_assert_eq!(u.left().to_vec(), default_order(&u.left_volumes()));
    }
}
