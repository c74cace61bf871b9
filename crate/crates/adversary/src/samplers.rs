//! Seeded samplers for the randomized lower-bound families.
//!
//! Every sampler draws from a ChaCha8 stream seeded with the given 64-bit
//! seed, so equal parameters give byte-identical instances. The instance's
//! `meta` field records the family, its parameters and the seed.

use eclair_core::{Instance, Job, JobId, Rat};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::AdversaryError;

/// Fractional bits of the dyadic grid that exponential draws are rounded to.
pub const EXP_FRACTION_BITS: u32 = 64;

/// Largest `k` accepted by the geometric family (`n = 2^k` jobs).
const MAX_GEOMETRIC_K: u32 = 24;

/// The randomized families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// `2^k` jobs at time zero with sizes `1 + Geom(1/2)`, `ε = 1/(2k)`.
    Geometric,
    /// `k` phases of geometrically shrinking length with a short and a long
    /// job each.
    Phase,
    /// `n` jobs at time zero with exponential sizes of mean 1.
    Exponential,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Geometric => "geometric",
            SamplerKind::Phase => "phase",
            SamplerKind::Exponential => "exp",
        })
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<SamplerKind, AdversaryError> {
        match s {
            "geometric" | "geom" => Ok(SamplerKind::Geometric),
            "phase" => Ok(SamplerKind::Phase),
            "exp" | "exponential" => Ok(SamplerKind::Exponential),
            other => Err(AdversaryError::Input(format!(
                "unknown sampler `{other}` (expected geometric, phase or exp)"
            ))),
        }
    }
}

/// A family together with its size parameter, ε and seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SamplerParams {
    /// Which family.
    pub kind: SamplerKind,
    /// `k` for the geometric and phase families, `n` for the exponential one.
    pub size: u32,
    /// Clairvoyance parameter of the drawn instances.
    pub epsilon: Rat,
    /// Seed of the random stream.
    pub seed: u64,
}

/// One draw: the instance and the time at which the family is evaluated
/// (`τ` for the geometric family, the end of the last phase for the phase
/// family, none for the exponential family).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Draw {
    /// The sampled instance.
    pub instance: Instance,
    /// Evaluation time, if the family has one.
    pub horizon: Option<Rat>,
}

impl SamplerParams {
    /// The geometric family with `n = 2^k` jobs and the implied `ε = 1/(2k)`.
    pub fn geometric(k: u32, seed: u64) -> SamplerParams {
        SamplerParams {
            kind: SamplerKind::Geometric,
            size: k,
            epsilon: Rat::new(1, 2 * i64::from(k.max(1))),
            seed,
        }
    }

    /// The phase family with `k` phases.
    pub fn phase(epsilon: Rat, k: u32, seed: u64) -> SamplerParams {
        SamplerParams {
            kind: SamplerKind::Phase,
            size: k,
            epsilon,
            seed,
        }
    }

    /// The exponential family with `n` jobs.
    pub fn exponential(epsilon: Rat, n: u32, seed: u64) -> SamplerParams {
        SamplerParams {
            kind: SamplerKind::Exponential,
            size: n,
            epsilon,
            seed,
        }
    }

    /// The same parameters with another seed.
    pub fn with_seed(&self, seed: u64) -> SamplerParams {
        SamplerParams {
            seed,
            ..self.clone()
        }
    }

    /// Draws one instance.
    pub fn draw(&self) -> Result<Draw, AdversaryError> {
        match self.kind {
            SamplerKind::Geometric => {
                let (instance, tau) = randomized_lb_sample(self.size, self.seed)?;
                Ok(Draw {
                    instance: instance.with_epsilon(self.epsilon.clone())?,
                    horizon: Some(tau),
                })
            }
            SamplerKind::Phase => {
                let instance = phase_lb_sample(&self.epsilon, self.size, self.seed)?;
                let horizon = instance
                    .meta
                    .as_ref()
                    .and_then(|m| m["horizon"].as_str())
                    .map(|h| h.parse().expect("horizon is a rational literal"));
                Ok(Draw { instance, horizon })
            }
            SamplerKind::Exponential => Ok(Draw {
                instance: exp_simultaneous_sample(&self.epsilon, self.size, self.seed)?,
                horizon: None,
            }),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `⌊3(n − n^{3/4})⌋` for `n = 2^k`, computed exactly.
///
/// ```
/// use eclair_adversary::geometric_tau;
///
/// assert_eq!(geometric_tau(1), 0);
/// assert_eq!(geometric_tau(4), 24);
/// ```
pub fn geometric_tau(k: u32) -> u64 {
    let n = 1u128 << k;
    // The largest m with 3n − m ≥ 3·n^{3/4}, i.e. (3n − m)^4 ≥ 81·n^3.
    let fits = |m: u128| {
        let d = 3 * n - m;
        d.pow(4) >= 81 * n.pow(3)
    };
    let guess = (3.0 * (n as f64 - (n as f64).powf(0.75))).floor().max(0.0) as u128;
    let mut m = guess.saturating_sub(2);
    while m < 3 * n && fits(m + 1) {
        m += 1;
    }
    while m > 0 && !fits(m) {
        m -= 1;
    }
    m as u64
}

/// The geometric family: `n = 2^k` jobs released at time zero with integer
/// sizes `1 + Y_j`, where `Y_j` counts fair coin flips up to and including
/// the first success (so `Y_j ≥ 1` and `E[P_j] = 3`). Returns the instance
/// (with `ε = 1/(2k)`) and the evaluation time `τ = ⌊3(n − n^{3/4})⌋`.
///
/// ```
/// use eclair_adversary::randomized_lb_sample;
/// use eclair_core::Rat;
///
/// let (inst, tau) = randomized_lb_sample(1, 7).unwrap();
/// assert_eq!(inst.jobs.len(), 2);
/// assert_eq!(tau, Rat::zero());
/// assert_eq!(inst.epsilon, Rat::new(1, 2));
/// ```
pub fn randomized_lb_sample(k: u32, seed: u64) -> Result<(Instance, Rat), AdversaryError> {
    if k == 0 || k > MAX_GEOMETRIC_K {
        return Err(AdversaryError::Input(format!(
            "geometric family needs 1 ≤ k ≤ {MAX_GEOMETRIC_K}, got {k}"
        )));
    }
    let n = 1u64 << k;
    let coin = Geometric::new(0.5).expect("valid success probability");
    let mut rng = rng(seed);
    let jobs = (1..=n)
        .map(|id| {
            // `Geometric` counts failures before the first success.
            let y = coin.sample(&mut rng) + 1;
            Job::new(id, Rat::zero(), Rat::from(1 + y))
        })
        .collect();
    let tau = geometric_tau(k);
    let mut inst = Instance::new(Rat::new(1, 2 * i64::from(k)), jobs)?;
    inst.meta = Some(json!({
        "kind": "geometric",
        "k": k,
        "n": n,
        "epsilon": inst.epsilon.to_string(),
        "tau": tau,
        "seed": seed,
    }));
    Ok((inst, Rat::from(tau)))
}

/// The phase family: `λ = (5−ε)/(1−ε)`, phases `i = k, …, 1` of length `λ^i`
/// back to back from time zero. At the start of each phase two jobs arrive
/// with sizes `λ^i` and `2λ^i`; a fair coin decides which of the two ids is
/// the short one. The end of the last phase is recorded as `horizon` in the
/// metadata.
///
/// ```
/// use eclair_adversary::phase_lb_sample;
/// use eclair_core::Rat;
///
/// let inst = phase_lb_sample(&Rat::new(1, 2), 1, 3).unwrap();
/// let mut sizes: Vec<Rat> = inst.jobs.iter().map(|j| j.size.clone().unwrap()).collect();
/// sizes.sort();
/// assert_eq!(sizes, vec![Rat::int(9), Rat::int(18)]);
/// ```
pub fn phase_lb_sample(epsilon: &Rat, k: u32, seed: u64) -> Result<Instance, AdversaryError> {
    if !epsilon.is_positive() || *epsilon >= Rat::one() {
        return Err(AdversaryError::Input(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let lambda = (Rat::int(5) - epsilon) / (Rat::one() - epsilon);
    let mut rng = rng(seed);
    let mut jobs = Vec::new();
    let mut short = Vec::new();
    let mut start = Rat::zero();
    for (slot, i) in (1..=k).rev().enumerate() {
        let len = lambda.pow(i);
        let (a, b) = (2 * slot as JobId + 1, 2 * slot as JobId + 2);
        let (s, l) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        jobs.push(Job::new(s, start.clone(), len.clone()));
        jobs.push(Job::new(l, start.clone(), &len * Rat::int(2)));
        jobs.sort_by_key(|j| j.id);
        short.push(s);
        start += &len;
    }
    let mut inst = Instance::new(epsilon.clone(), jobs)?;
    inst.meta = Some(json!({
        "kind": "phase",
        "k": k,
        "epsilon": epsilon.to_string(),
        "lambda": lambda.to_string(),
        "horizon": start.to_string(),
        "short": short,
        "seed": seed,
    }));
    Ok(inst)
}

/// The exponential family: `n` jobs at time zero whose sizes are inverse-CDF
/// draws `−ln U` of a unit-mean exponential, rounded to the nearest multiple
/// of `2^-64`. The metadata records the grid so the rounding is part of the
/// instance's description.
///
/// ```
/// use eclair_adversary::exp_simultaneous_sample;
/// use eclair_core::Rat;
///
/// let inst = exp_simultaneous_sample(&Rat::new(1, 2), 1, 11).unwrap();
/// assert!(inst.jobs[0].size.as_ref().unwrap().is_positive());
/// assert_eq!(inst.meta.unwrap()["fraction_bits"], 64);
/// ```
pub fn exp_simultaneous_sample(
    epsilon: &Rat,
    n: u32,
    seed: u64,
) -> Result<Instance, AdversaryError> {
    if n == 0 {
        return Err(AdversaryError::Input(
            "the exponential family needs n ≥ 1".into(),
        ));
    }
    let mut rng = rng(seed);
    let scale = 2f64.powi(EXP_FRACTION_BITS as i32);
    let jobs = (1..=u64::from(n))
        .map(|id| {
            let u: f64 = rng.sample(Open01);
            // u < 1 keeps the draw at least 2^-53, far above the grid step.
            let mantissa = (-u.ln() * scale).round() as u128;
            Job::new(
                id,
                Rat::zero(),
                Rat::dyadic(mantissa.into(), EXP_FRACTION_BITS),
            )
        })
        .collect();
    let mut inst = Instance::new(epsilon.clone(), jobs)?;
    inst.meta = Some(json!({
        "kind": "exp",
        "n": n,
        "epsilon": epsilon.to_string(),
        "fraction_bits": EXP_FRACTION_BITS,
        "rounding": "nearest",
        "seed": seed,
    }));
    Ok(inst)
}
