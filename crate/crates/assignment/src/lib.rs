//! Fractional assignments between the remaining work of two schedules.
//!
//! An assignment is a weighted bipartite graph whose left side holds the
//! algorithm's active jobs and whose right side holds the reference
//! schedule's active jobs, each side with an explicit order. Its *prefix
//! expansion* `φ` bounds the ratio of active-job counts: whenever
//! `φ ≤ ⌈1/ε⌉`, the algorithm holds at most `⌈1/ε⌉` times as many jobs.

mod graph;
mod ops;

use eclair_core::{JobId, Rat};

pub use graph::{default_order, AssignmentChecked, EdgeDoc, Graph, GraphDoc, VertexDoc};
pub use ops::{canonical, greedy_matching, merge, merge_ordered, min_suffix, split, union};

/// Errors raised while building or transforming assignments.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssignmentError {
    /// A vertex appears twice in an order.
    #[error("vertex {0} appears twice")]
    DuplicateVertex(JobId),
    /// An edge endpoint is not a vertex.
    #[error("edge ({0}, {1}) has an endpoint outside the graph")]
    DanglingEdge(JobId, JobId),
    /// A weight would become negative.
    #[error("edge ({0}, {1}) would have negative weight")]
    NegativeWeight(JobId, JobId),
    /// A volume is negative.
    #[error("negative volume")]
    NegativeVolume,
    /// The two sides carry different totals.
    #[error("left total {0} differs from right total {1}")]
    UnequalTotals(Box<Rat>, Box<Rat>),
    /// The operation requires a forward graph.
    #[error("graph is not forward")]
    NotForward,
    /// The split amount is outside `[0, volume]`.
    #[error("cannot split {0} from volume {1}")]
    BadSplit(Box<Rat>, Box<Rat>),
    /// The graphs to merge share a vertex.
    #[error("vertex {0} appears in both graphs")]
    NotDisjoint(JobId),
    /// A supplied order is not a permutation of the vertices.
    #[error("order is not a permutation of the vertices")]
    OrderMismatch,
    /// Stated volumes disagree with the edges.
    #[error("stated volumes disagree with the edges")]
    VolumeMismatch,
}
