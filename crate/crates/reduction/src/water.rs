//! Two sets of jars filled least-loaded first.

use std::collections::BTreeMap;

use eclair_core::{Instance, Job, JobId, Rat};
use eclair_sim::{simulate_from, Policy, Schedule};
use serde::{Deserialize, Serialize};

use crate::trace::{elapsed_profile, union_times};
use crate::ReductionError;

/// Initial levels `x` and `x′` of two sets of jars with common capacities
/// `p`. Water pours into each set at unit rate, always into the least-filled
/// jars that are not yet full, split evenly among ties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaterFillingConfig {
    /// Initial levels of the first set.
    pub x: Vec<Rat>,
    /// Initial levels of the second set.
    pub x_prime: Vec<Rat>,
    /// Capacities, shared by both sets.
    pub p: Vec<Rat>,
}

impl WaterFillingConfig {
    /// Builds a configuration, checking `0 ≤ x_i ≤ x′_i ≤ p_i` for every jar.
    ///
    /// ```
    /// use eclair_core::Rat;
    /// use eclair_reduction::WaterFillingConfig;
    ///
    /// let ok = WaterFillingConfig::new(
    ///     vec![Rat::zero()],
    ///     vec![Rat::one()],
    ///     vec![Rat::int(2)],
    /// );
    /// assert!(ok.is_ok());
    /// let bad = WaterFillingConfig::new(
    ///     vec![Rat::one()],
    ///     vec![Rat::zero()],
    ///     vec![Rat::int(2)],
    /// );
    /// assert!(bad.is_err());
    /// ```
    pub fn new(x: Vec<Rat>, x_prime: Vec<Rat>, p: Vec<Rat>) -> Result<Self, ReductionError> {
        let cfg = WaterFillingConfig { x, x_prime, p };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the shape and the ordering `0 ≤ x ≤ x′ ≤ p`.
    pub fn validate(&self) -> Result<(), ReductionError> {
        if self.x.len() != self.p.len() || self.x_prime.len() != self.p.len() {
            return Err(ReductionError::Precondition(format!(
                "x, x′ and p must have equal lengths (got {}, {}, {})",
                self.x.len(),
                self.x_prime.len(),
                self.p.len()
            )));
        }
        for (i, ((x, xp), p)) in self.x.iter().zip(&self.x_prime).zip(&self.p).enumerate() {
            if x.is_negative() || x > xp || xp > p {
                return Err(ReductionError::Precondition(format!(
                    "jar {i}: need 0 ≤ x ≤ x′ ≤ p, got x = {x}, x′ = {xp}, p = {p}"
                )));
            }
        }
        Ok(())
    }

    /// Number of jars.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    /// `true` without jars.
    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Levels of both jar sets at every breakpoint. Between consecutive
/// breakpoints every level moves linearly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WaterFillingTrajectories {
    /// Breakpoints, ascending from zero: the union of both sets' events.
    pub times: Vec<Rat>,
    /// `e(t)` at each breakpoint, one entry per jar.
    pub first: Vec<Vec<Rat>>,
    /// `e′(t)` at each breakpoint, one entry per jar.
    pub second: Vec<Vec<Rat>>,
    /// When the first set is full, `Σ(p − x)`.
    pub full_first: Rat,
    /// When the second set is full, `Σ(p − x′)`.
    pub full_second: Rat,
}

impl WaterFillingTrajectories {
    /// `(e(t), e′(t))` at an arbitrary time, interpolating between
    /// breakpoints.
    pub fn levels_at(&self, t: &Rat) -> (Vec<Rat>, Vec<Rat>) {
        let i = self.times.partition_point(|s| s <= t);
        if i == 0 {
            return (self.first[0].clone(), self.second[0].clone());
        }
        if i == self.times.len() {
            return (self.first[i - 1].clone(), self.second[i - 1].clone());
        }
        let (a, b) = (&self.times[i - 1], &self.times[i]);
        let w = (t - a) / (b - a);
        let lerp = |lo: &[Rat], hi: &[Rat]| -> Vec<Rat> {
            lo.iter().zip(hi).map(|(l, h)| l + (h - l) * &w).collect()
        };
        (
            lerp(&self.first[i - 1], &self.first[i]),
            lerp(&self.second[i - 1], &self.second[i]),
        )
    }
}

/// Runs one jar set as SETF on jobs released at time zero whose elapsed
/// times start at the water levels. Zero-capacity jars are left out.
fn fill(levels: &[Rat], p: &[Rat]) -> Result<Schedule, ReductionError> {
    let mut jobs = Vec::new();
    let mut initial: BTreeMap<JobId, Rat> = BTreeMap::new();
    for (i, (x, cap)) in levels.iter().zip(p).enumerate() {
        if cap.is_positive() {
            let id = i as JobId + 1;
            jobs.push(Job::new(id, Rat::zero(), cap.clone()));
            initial.insert(id, x.clone());
        }
    }
    let inst = Instance::new(Rat::zero(), jobs)?;
    Ok(simulate_from(&inst, Policy::Setf, &Rat::one(), &initial)?)
}

fn jar_levels(profile: Vec<BTreeMap<JobId, Rat>>, n: usize) -> Vec<Vec<Rat>> {
    profile
        .into_iter()
        .map(|e| {
            (1..=n as JobId)
                .map(|id| e.get(&id).cloned().unwrap_or_else(Rat::zero))
                .collect()
        })
        .collect()
}

/// Evolves both jar sets exactly until both are full.
///
/// ```
/// use eclair_core::Rat;
/// use eclair_reduction::{water_filling_trajectories, WaterFillingConfig};
///
/// let cfg = WaterFillingConfig::new(
///     vec![Rat::zero(), Rat::zero()],
///     vec![Rat::zero(), Rat::one()],
///     vec![Rat::int(2), Rat::int(2)],
/// ).unwrap();
/// let traj = water_filling_trajectories(&cfg).unwrap();
/// let (e, e_prime) = traj.levels_at(&Rat::one());
/// assert_eq!(e, vec![Rat::new(1, 2), Rat::new(1, 2)]);
/// assert_eq!(e_prime, vec![Rat::one(), Rat::one()]);
/// assert_eq!(traj.full_first, Rat::int(4));
/// ```
pub fn water_filling_trajectories(
    cfg: &WaterFillingConfig,
) -> Result<WaterFillingTrajectories, ReductionError> {
    cfg.validate()?;
    let one = fill(&cfg.x, &cfg.p)?;
    let two = fill(&cfg.x_prime, &cfg.p)?;
    let times = union_times(&[&one, &two]);
    let n = cfg.len();
    Ok(WaterFillingTrajectories {
        first: jar_levels(elapsed_profile(&one, &times), n),
        second: jar_levels(elapsed_profile(&two, &times), n),
        full_first: one.horizon.clone(),
        full_second: two.horizon.clone(),
        times,
    })
}

/// The first jar and time at which `e_i(t) > e′_i(t)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DominanceWitness {
    /// Time of the violation.
    pub t: Rat,
    /// Jar index, from zero.
    pub jar: usize,
    /// `e_i(t)`.
    pub level: Rat,
    /// `e′_i(t)`.
    pub level_prime: Rat,
}

/// Outcome of [`water_filling_dominance`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DominanceReport {
    /// `true` if `e(t) ≤ e′(t)` jar by jar at every breakpoint.
    pub holds: bool,
    /// Number of breakpoints checked.
    pub checked_times: usize,
    /// The first violation, if any.
    pub violation: Option<DominanceWitness>,
}

/// Checks `e(t) ≤ e′(t)` jar by jar at every breakpoint of the two
/// trajectories. Levels are linear between breakpoints, so this covers all
/// times. A configuration that violates `x ≤ x′` is rejected with
/// [`ReductionError::Precondition`] instead of being reported as a
/// violation.
///
/// ```
/// use eclair_core::Rat;
/// use eclair_reduction::{water_filling_dominance, WaterFillingConfig};
///
/// let cfg = WaterFillingConfig::new(
///     vec![Rat::zero(), Rat::new(1, 3)],
///     vec![Rat::one(), Rat::new(1, 3)],
///     vec![Rat::int(3), Rat::one()],
/// ).unwrap();
/// let report = water_filling_dominance(&cfg).unwrap();
/// assert!(report.holds);
/// ```
pub fn water_filling_dominance(
    cfg: &WaterFillingConfig,
) -> Result<DominanceReport, ReductionError> {
    let traj = water_filling_trajectories(cfg)?;
    let violation = traj
        .times
        .iter()
        .zip(traj.first.iter().zip(&traj.second))
        .find_map(|(t, (e, ep))| {
            e.iter()
                .zip(ep)
                .position(|(a, b)| a > b)
                .map(|jar| DominanceWitness {
                    t: t.clone(),
                    jar,
                    level: e[jar].clone(),
                    level_prime: ep[jar].clone(),
                })
        });
    Ok(DominanceReport {
        holds: violation.is_none(),
        checked_times: traj.times.len(),
        violation,
    })
}
