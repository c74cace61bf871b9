//! Monte-Carlo summaries over the randomized families.

use eclair_core::Rat;
use eclair_metrics::{delta_at, total_flow_time};
use eclair_sim::{simulate, IntervalSet, Policy};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::Statistics;

use crate::{AdversaryError, SamplerKind, SamplerParams};

/// Measurements on one draw.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    /// Seed of the draw.
    pub seed: u64,
    /// Number of jobs.
    pub n: usize,
    /// Evaluation time, if the family has one.
    pub horizon: Option<Rat>,
    /// `δ(horizon, 1)`: the policy's active jobs with at least one unit left.
    pub delta_alg: Option<usize>,
    /// `δ*(horizon)`: SRPT's active jobs.
    pub delta_opt: Option<usize>,
    /// Total flow time of the policy.
    pub flow_alg: Rat,
    /// Total flow time of SRPT.
    pub flow_opt: Rat,
    /// `flow_alg / flow_opt`, rounded to the nearest float.
    pub flow_ratio: f64,
}

/// A sample mean with the half-width of its 95% Student-t interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    /// Sample mean.
    pub mean: f64,
    /// Half-width of the 95% confidence interval (0 below two samples).
    pub half_width: f64,
}

impl Estimate {
    /// Mean and 95% half-width of `values` (NaN mean when empty).
    pub fn of(values: &[f64]) -> Estimate {
        let mean = values.mean();
        let half_width = if values.len() < 2 {
            0.0
        } else {
            let df = (values.len() - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, df)
                .expect("positive degrees of freedom")
                .inverse_cdf(0.975);
            t * values.std_dev() / (values.len() as f64).sqrt()
        };
        Estimate { mean, half_width }
    }
}

/// Outcome of [`lb_statistics`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LbSummary {
    /// The family and its parameters (seed of the first draw).
    pub params: SamplerParams,
    /// The policy measured.
    pub policy: String,
    /// Per-draw measurements, in seed order.
    pub rows: Vec<SampleRow>,
    /// Flow ratio against SRPT.
    pub flow_ratio: Estimate,
    /// `δ(horizon, 1)` (families with a horizon only).
    pub delta_alg: Option<Estimate>,
    /// `δ*(horizon)` (families with a horizon only).
    pub delta_opt: Option<Estimate>,
    /// `E[δ(horizon, 1)] / E[δ*(horizon)]` as the ratio of sample means.
    pub delta_ratio: Option<f64>,
    /// `2 − ε` for the exponential family, the instance-wise upper bound and
    /// the limit of the expected ratio.
    pub target: Option<f64>,
}

impl LbSummary {
    /// The per-draw rows as CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "kind",
            "size",
            "epsilon",
            "seed",
            "n",
            "horizon",
            "delta_alg",
            "delta_opt",
            "flow_alg",
            "flow_opt",
            "flow_ratio",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                self.params.kind.to_string(),
                self.params.size.to_string(),
                self.params.epsilon.to_string(),
                r.seed.to_string(),
                r.n.to_string(),
                opt(r.horizon.as_ref().map(Rat::to_string)),
                opt(r.delta_alg.map(|d| d.to_string())),
                opt(r.delta_opt.map(|d| d.to_string())),
                r.flow_alg.to_string(),
                r.flow_opt.to_string(),
                r.flow_ratio.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws `samples` instances with seeds `params.seed, params.seed + 1, …`,
/// runs `policy` and SRPT on each and summarises. Draws run in parallel on
/// the current rayon pool; results are kept in seed order, so the summary
/// does not depend on the number of threads.
///
/// ```
/// use eclair_adversary::{lb_statistics, SamplerParams};
/// use eclair_core::Rat;
/// use eclair_sim::Policy;
///
/// let params = SamplerParams::exponential(Rat::new(1, 2), 1, 5);
/// let summary = lb_statistics(&params, 3, Policy::Slf).unwrap();
/// assert!(summary.rows.iter().all(|r| r.flow_ratio == 1.0));
/// ```
pub fn lb_statistics(
    params: &SamplerParams,
    samples: usize,
    policy: Policy,
) -> Result<LbSummary, AdversaryError> {
    let rows: Vec<SampleRow> = (0..samples as u64)
        .into_par_iter()
        .map(|i| measure(&params.with_seed(params.seed.wrapping_add(i)), policy))
        .collect::<Result<_, _>>()?;
    let col = |f: fn(&SampleRow) -> Option<usize>| -> Option<Vec<f64>> {
        rows.iter().map(|r| f(r).map(|d| d as f64)).collect()
    };
    let ratios: Vec<f64> = rows.iter().map(|r| r.flow_ratio).collect();
    let delta_alg = col(|r| r.delta_alg).filter(|v| !v.is_empty());
    let delta_opt = col(|r| r.delta_opt).filter(|v| !v.is_empty());
    let delta_ratio = match (&delta_alg, &delta_opt) {
        (Some(a), Some(o)) => Some(a.iter().sum::<f64>() / o.iter().sum::<f64>()),
        _ => None,
    };
    Ok(LbSummary {
        params: params.clone(),
        policy: policy.to_string(),
        flow_ratio: Estimate::of(&ratios),
        delta_alg: delta_alg.as_deref().map(Estimate::of),
        delta_opt: delta_opt.as_deref().map(Estimate::of),
        delta_ratio,
        target: (params.kind == SamplerKind::Exponential).then(|| 2.0 - params.epsilon.to_f64()),
        rows,
    })
}

fn measure(params: &SamplerParams, policy: Policy) -> Result<SampleRow, AdversaryError> {
    let draw = params.draw()?;
    let inst = &draw.instance;
    let alg = simulate(inst, policy, &Rat::one(), &IntervalSet::empty())?;
    let opt = simulate(inst, Policy::Srpt, &Rat::one(), &IntervalSet::empty())?;
    let (flow_alg, flow_opt) = (total_flow_time(&alg)?, total_flow_time(&opt)?);
    let flow_ratio = if flow_opt.is_zero() {
        1.0
    } else {
        (&flow_alg / &flow_opt).to_f64()
    };
    Ok(SampleRow {
        seed: params.seed,
        n: inst.jobs.len(),
        delta_alg: draw
            .horizon
            .as_ref()
            .map(|t| delta_at(&alg, t, &Rat::one())),
        delta_opt: draw.horizon.as_ref().map(|t| opt.active_count(t)),
        horizon: draw.horizon,
        flow_alg,
        flow_opt,
        flow_ratio,
    })
}
