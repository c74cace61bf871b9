//! The weighted bipartite graph and its structural predicates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use eclair_core::{ceil_inv, JobId, Rat};
use serde::{Deserialize, Serialize};

use crate::AssignmentError;

/// Orders vertices by non-increasing volume; equal volumes are ordered by
/// descending id, so that among equals the lowest id comes last.
///
/// ```
/// use eclair_assignment::default_order;
/// use eclair_core::Rat;
///
/// let order = default_order(&[(3, Rat::int(1)), (4, Rat::int(1)), (1, Rat::int(5))]);
/// assert_eq!(order, vec![1, 4, 3]);
/// ```
pub fn default_order(vols: &[(JobId, Rat)]) -> Vec<JobId> {
    let mut v: Vec<&(JobId, Rat)> = vols.iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(b.0.cmp(&a.0)));
    v.into_iter().map(|(id, _)| *id).collect()
}

/// A fractional matching between a left queue (the algorithm's jobs) and a
/// right queue (the optimum's jobs), with explicit vertex orders.
///
/// Volumes are implied by the edges: `vol(i) = Σ_j w(i, j)` on the left and
/// `vol*(j) = Σ_i w(i, j)` on the right. Only positive weights are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    left: Vec<JobId>,
    right: Vec<JobId>,
    edges: BTreeMap<(JobId, JobId), Rat>,
}

impl Graph {
    /// The graph without vertices.
    pub fn empty() -> Graph {
        Graph::default()
    }

    /// Builds a graph from vertex orders and weighted edges. Zero weights are
    /// dropped; repeated edges add up.
    pub fn new(
        left: Vec<JobId>,
        right: Vec<JobId>,
        edges: impl IntoIterator<Item = (JobId, JobId, Rat)>,
    ) -> Result<Graph, AssignmentError> {
        check_distinct(&left)?;
        check_distinct(&right)?;
        let ls: BTreeSet<JobId> = left.iter().copied().collect();
        let rs: BTreeSet<JobId> = right.iter().copied().collect();
        let mut map: BTreeMap<(JobId, JobId), Rat> = BTreeMap::new();
        for (l, r, w) in edges {
            if !ls.contains(&l) || !rs.contains(&r) {
                return Err(AssignmentError::DanglingEdge(l, r));
            }
            if w.is_negative() {
                return Err(AssignmentError::NegativeWeight(l, r));
            }
            *map.entry((l, r)).or_insert_with(Rat::zero) += w;
        }
        map.retain(|_, w| w.is_positive());
        Ok(Graph {
            left,
            right,
            edges: map,
        })
    }

    /// The perfect matching `{(j, j) : w_j}` over the given jobs, in default order.
    pub fn perfect_matching(weights: &[(JobId, Rat)]) -> Graph {
        let order = default_order(weights);
        Graph::new(
            order.clone(),
            order,
            weights.iter().map(|(id, w)| (*id, *id, w.clone())),
        )
        .expect("a perfect matching is well formed")
    }

    /// Left vertices in order.
    pub fn left(&self) -> &[JobId] {
        &self.left
    }

    /// Right vertices in order.
    pub fn right(&self) -> &[JobId] {
        &self.right
    }

    /// Edges `(left, right, weight)`, ascending by `(left id, right id)`.
    pub fn edges(&self) -> impl Iterator<Item = (JobId, JobId, &Rat)> {
        self.edges.iter().map(|((l, r), w)| (*l, *r, w))
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Weight of edge `(l, r)` (zero if absent).
    pub fn weight(&self, l: JobId, r: JobId) -> Rat {
        self.edges.get(&(l, r)).cloned().unwrap_or_else(Rat::zero)
    }

    /// `vol(i)` of a left vertex.
    pub fn vol(&self, l: JobId) -> Rat {
        self.edges
            .range((l, JobId::MIN)..=(l, JobId::MAX))
            .map(|(_, w)| w)
            .sum()
    }

    /// `vol*(j)` of a right vertex.
    pub fn vol_star(&self, r: JobId) -> Rat {
        self.edges
            .iter()
            .filter(|((_, rr), _)| *rr == r)
            .map(|(_, w)| w)
            .sum()
    }

    /// Total weight.
    pub fn volume(&self) -> Rat {
        self.edges.values().sum()
    }

    /// `(id, vol)` for the left vertices, in order.
    pub fn left_volumes(&self) -> Vec<(JobId, Rat)> {
        let mut acc: HashMap<JobId, Rat> = HashMap::new();
        for ((l, _), w) in &self.edges {
            *acc.entry(*l).or_insert_with(Rat::zero) += w;
        }
        self.left
            .iter()
            .map(|id| (*id, acc.remove(id).unwrap_or_else(Rat::zero)))
            .collect()
    }

    /// `(id, vol*)` for the right vertices, in order.
    pub fn right_volumes(&self) -> Vec<(JobId, Rat)> {
        let mut acc: HashMap<JobId, Rat> = HashMap::new();
        for ((_, r), w) in &self.edges {
            *acc.entry(*r).or_insert_with(Rat::zero) += w;
        }
        self.right
            .iter()
            .map(|id| (*id, acc.remove(id).unwrap_or_else(Rat::zero)))
            .collect()
    }

    /// Left neighbours of a set of right vertices.
    pub fn neighbors(&self, rights: &BTreeSet<JobId>) -> BTreeSet<JobId> {
        self.edges
            .keys()
            .filter(|(_, r)| rights.contains(r))
            .map(|(l, _)| *l)
            .collect()
    }

    /// Removes vertices without edges, keeping the orders of the rest.
    pub fn pruned(&self) -> Graph {
        let ls: BTreeSet<JobId> = self.edges.keys().map(|(l, _)| *l).collect();
        let rs: BTreeSet<JobId> = self.edges.keys().map(|(_, r)| *r).collect();
        Graph {
            left: self
                .left
                .iter()
                .copied()
                .filter(|id| ls.contains(id))
                .collect(),
            right: self
                .right
                .iter()
                .copied()
                .filter(|id| rs.contains(id))
                .collect(),
            edges: self.edges.clone(),
        }
    }

    /// The same edges with both sides re-sorted into the default order of
    /// their current volumes.
    pub fn with_default_order(&self) -> Graph {
        Graph {
            left: default_order(&self.left_volumes()),
            right: default_order(&self.right_volumes()),
            edges: self.edges.clone(),
        }
    }

    /// The same edges under explicit orders (each a permutation of the sides).
    pub fn with_orders(
        &self,
        left: Vec<JobId>,
        right: Vec<JobId>,
    ) -> Result<Graph, AssignmentError> {
        let same = |a: &[JobId], b: &[JobId]| {
            a.iter().copied().collect::<BTreeSet<_>>() == b.iter().copied().collect::<BTreeSet<_>>()
                && a.len() == b.len()
        };
        if !same(&left, &self.left) || !same(&right, &self.right) {
            return Err(AssignmentError::OrderMismatch);
        }
        Ok(Graph {
            left,
            right,
            edges: self.edges.clone(),
        })
    }

    /// The subgraph on the given vertices (edges between kept vertices only),
    /// keeping the orders.
    pub fn restrict(&self, left: &BTreeSet<JobId>, right: &BTreeSet<JobId>) -> Graph {
        Graph {
            left: self
                .left
                .iter()
                .copied()
                .filter(|id| left.contains(id))
                .collect(),
            right: self
                .right
                .iter()
                .copied()
                .filter(|id| right.contains(id))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|((l, r), _)| left.contains(l) && right.contains(r))
                .map(|(k, w)| (*k, w.clone()))
                .collect(),
        }
    }

    /// Lowers the weight of edge `(l, r)` by `amount`, dropping it at zero.
    pub fn reduce_edge(&mut self, l: JobId, r: JobId, amount: &Rat) -> Result<(), AssignmentError> {
        if amount.is_zero() {
            return Ok(());
        }
        let w = self
            .edges
            .get_mut(&(l, r))
            .ok_or(AssignmentError::NegativeWeight(l, r))?;
        *w -= amount;
        if w.is_negative() {
            return Err(AssignmentError::NegativeWeight(l, r));
        }
        if w.is_zero() {
            self.edges.remove(&(l, r));
        }
        Ok(())
    }

    fn positions(order: &[JobId]) -> HashMap<JobId, usize> {
        order.iter().enumerate().map(|(i, id)| (*id, i)).collect()
    }

    /// Edges as `(left position, right position, weight)`, sorted by positions.
    pub(crate) fn positioned_edges(&self) -> Vec<(usize, usize, JobId, JobId, Rat)> {
        let lp = Graph::positions(&self.left);
        let rp = Graph::positions(&self.right);
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|((l, r), w)| (lp[l], rp[r], *l, *r, w.clone()))
            .collect();
        v.sort_by_key(|e| (e.0, e.1));
        v
    }

    /// `true` if no two edges cross: there are no edges `(u1, v1)`, `(u2, v2)`
    /// with `u1 > u2` and `v1 < v2` under the attached orders.
    pub fn is_forward(&self) -> bool {
        let e = self.positioned_edges();
        e.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    /// `true` if there is no parallel pair: no edges `(u1, v1)`, `(u2, v2)`
    /// with `u1 < u2` and `v1 < v2` under the attached orders.
    pub fn is_backward(&self) -> bool {
        let mut e = self.positioned_edges();
        e.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        e.windows(2).all(|w| w[0].1 >= w[1].1)
    }

    /// The prefix expansion `φ = max_k |N(first k right vertices)| / k`,
    /// computed after removing isolated vertices; zero without edges.
    pub fn prefix_expansion(&self) -> Rat {
        let g = self.pruned();
        let mut seen: BTreeSet<JobId> = BTreeSet::new();
        let mut best = Rat::zero();
        let mut by_right: HashMap<JobId, Vec<JobId>> = HashMap::new();
        for (l, r) in g.edges.keys() {
            by_right.entry(*r).or_default().push(*l);
        }
        for (k, r) in g.right.iter().enumerate() {
            seen.extend(by_right.get(r).into_iter().flatten().copied());
            let ratio = Rat::from(seen.len()) / Rat::from(k + 1);
            if ratio > best {
                best = ratio;
            }
        }
        best
    }

    /// Serialisable form.
    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            left: self
                .left_volumes()
                .into_iter()
                .map(|(id, vol)| VertexDoc { id, vol })
                .collect(),
            right: self
                .right_volumes()
                .into_iter()
                .map(|(id, vol)| VertexDoc { id, vol })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|((l, r), w)| EdgeDoc {
                    l: *l,
                    r: *r,
                    w: w.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a graph from its serialised form; the stated volumes must
    /// match the edges.
    pub fn from_doc(doc: &GraphDoc) -> Result<Graph, AssignmentError> {
        let g = Graph::new(
            doc.left.iter().map(|v| v.id).collect(),
            doc.right.iter().map(|v| v.id).collect(),
            doc.edges.iter().map(|e| (e.l, e.r, e.w.clone())),
        )?;
        let stated_l: Vec<(JobId, Rat)> = doc.left.iter().map(|v| (v.id, v.vol.clone())).collect();
        let stated_r: Vec<(JobId, Rat)> = doc.right.iter().map(|v| (v.id, v.vol.clone())).collect();
        if g.left_volumes() != stated_l || g.right_volumes() != stated_r {
            return Err(AssignmentError::VolumeMismatch);
        }
        Ok(g)
    }
}

fn check_distinct(order: &[JobId]) -> Result<(), AssignmentError> {
    let mut seen = BTreeSet::new();
    for id in order {
        if !seen.insert(*id) {
            return Err(AssignmentError::DuplicateVertex(*id));
        }
    }
    Ok(())
}

/// A vertex in the serialised graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexDoc {
    /// Job id.
    pub id: JobId,
    /// Volume implied by the edges.
    pub vol: Rat,
}

/// An edge in the serialised graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    /// Left endpoint.
    pub l: JobId,
    /// Right endpoint.
    pub r: JobId,
    /// Weight.
    pub w: Rat,
}

/// Serialised graph: `{"left": [...], "right": [...], "edges": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    /// Left vertices in order.
    pub left: Vec<VertexDoc>,
    /// Right vertices in order.
    pub right: Vec<VertexDoc>,
    /// Edges.
    pub edges: Vec<EdgeDoc>,
}

/// A graph together with its prefix expansion and validity for a given ε.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentChecked {
    /// The assignment.
    pub graph: Graph,
    /// Its prefix expansion.
    pub phi: Rat,
    /// `φ ≤ ⌈1/ε⌉`.
    pub valid: bool,
}

impl AssignmentChecked {
    /// Computes φ and validity; requires ε > 0.
    pub fn check(graph: Graph, epsilon: &Rat) -> AssignmentChecked {
        let phi = graph.prefix_expansion();
        let valid = phi <= Rat::int(ceil_inv(epsilon));
        AssignmentChecked { graph, phi, valid }
    }
}
