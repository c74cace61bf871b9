//! Disjoint unions of half-open intervals.

use eclair_core::Rat;
use serde::{Deserialize, Serialize};

use crate::SimError;

/// A finite union of disjoint, sorted, non-empty half-open intervals `[a, b)`.
///
/// ```
/// use eclair_core::Rat;
/// use eclair_sim::IntervalSet;
///
/// let set = IntervalSet::from_pairs(vec![
///     (Rat::int(3), Rat::int(4)),
///     (Rat::int(1), Rat::int(2)),
///     (Rat::int(2), Rat::int(3)),
/// ]).unwrap();
/// assert_eq!(set.intervals().len(), 1);
/// assert!(set.contains(&Rat::int(1)));
/// assert!(!set.contains(&Rat::int(4)));
/// assert_eq!(set.measure(), Rat::int(3));
/// ```
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(Rat, Rat)>,
}

impl IntervalSet {
    /// The empty set.
    pub fn empty() -> IntervalSet {
        IntervalSet::default()
    }

    /// Normalises arbitrary intervals: drops empty ones, sorts, and merges
    /// overlapping or touching ones. Rejects `a > b`.
    pub fn from_pairs(mut pairs: Vec<(Rat, Rat)>) -> Result<IntervalSet, SimError> {
        if let Some((a, b)) = pairs.iter().find(|(a, b)| a > b) {
            return Err(SimError::BadInterval(
                Box::new(a.clone()),
                Box::new(b.clone()),
            ));
        }
        pairs.retain(|(a, b)| a < b);
        pairs.sort();
        let mut intervals: Vec<(Rat, Rat)> = Vec::new();
        for (a, b) in pairs {
            match intervals.last_mut() {
                Some((_, end)) if a <= *end => {
                    if b > *end {
                        *end = b;
                    }
                }
                _ => intervals.push((a, b)),
            }
        }
        Ok(IntervalSet { intervals })
    }

    /// The intervals in ascending order.
    pub fn intervals(&self) -> &[(Rat, Rat)] {
        &self.intervals
    }

    /// `true` if the set is empty.
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `true` if `t` lies in some `[a, b)`.
    pub fn contains(&self, t: &Rat) -> bool {
        self.covering(t).is_some()
    }

    /// The interval containing `t`, if any.
    pub fn covering(&self, t: &Rat) -> Option<&(Rat, Rat)> {
        let i = self.intervals.partition_point(|(_, b)| b <= t);
        self.intervals.get(i).filter(|(a, _)| a <= t)
    }

    /// The smallest interval start strictly after `t`.
    pub fn next_start_after(&self, t: &Rat) -> Option<&Rat> {
        let i = self.intervals.partition_point(|(a, _)| a <= t);
        self.intervals.get(i).map(|(a, _)| a)
    }

    /// Total length.
    pub fn measure(&self) -> Rat {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Length of the intersection with `[lo, hi)`.
    pub fn measure_within(&self, lo: &Rat, hi: &Rat) -> Rat {
        let mut total = Rat::zero();
        for (a, b) in &self.intervals {
            let a = Rat::max_of(a, lo);
            let b = Rat::min_of(b, hi);
            if a < b {
                total += b - a;
            }
        }
        total
    }
}
