//! Monte Carlo hypothesis tests: the null distribution of a statistic is
//! simulated at θ₀ and the observed value is located by normalized rank.

use rand::Rng;

use crate::data::Dataset;
use crate::model::Model;
use crate::prelude::*;
use crate::rng::Seed;
use crate::statistic::DataStatistic;
use crate::{par, special, stats, Error, Result};

/// Resampling attempts per null draw before an undefined statistic is fatal.
pub const RETRY_CAP: usize = 100;

/// Quantile levels kept in the null-sample summary.
pub const SUMMARY_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Side {
    /// Small values are evidence against the null.
    #[default]
    Lower,
    Upper,
    /// Twice the smaller one-sided p-value, capped at 1.
    TwoSided,
}

impl Side {
    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "lower" => Some(Side::Lower),
            "upper" => Some(Side::Upper),
            "two_sided" | "two-sided" => Some(Side::TwoSided),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
            Side::TwoSided => "two_sided",
        }
    }
}

/// Null statistic samples, kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    sorted: Vec<f64>,
    /// Draws on which the statistic was undefined and had to be resampled.
    pub undefined_draws: usize,
}

impl NullDistribution {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("empty null sample"));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("NaN in null sample"));
        }
        Ok(NullDistribution {
            sorted: stats::sorted(&samples),
            undefined_draws: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Counts of null samples strictly below and tied with `x`.
    fn rank(&self, x: f64) -> (usize, usize) {
        let below = self.sorted.partition_point(|&v| v < x);
        let not_above = self.sorted.partition_point(|&v| v <= x);
        (below, not_above - below)
    }

    /// Normalized-rank p-value. Each tie counts toward the lower tail with
    /// probability ½, otherwise toward the upper tail.
    pub fn pvalue(&self, observed: f64, side: Side, seed: Seed) -> f64 {
        let (below, ties) = self.rank(observed);
        let to_lower = if ties == 0 {
            0
        } else {
            let mut rng = seed.rng();
            (0..ties).filter(|_| rng.random::<bool>()).count()
        };
        let s = self.len() as f64;
        let lower = (below + to_lower) as f64 / s;
        let upper = (self.len() - below - ties + (ties - to_lower)) as f64 / s;
        match side {
            Side::Lower => lower,
            Side::Upper => upper,
            Side::TwoSided => (2.0 * lower.min(upper)).min(1.0),
        }
    }

    /// Empirical type-7 quantile threshold(s) at level `alpha`.
    pub fn critical_value(&self, alpha: f64, side: Side) -> Result<CriticalValue> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let tail = match side {
            Side::TwoSided => alpha / 2.0,
            _ => alpha.min(1.0 - alpha),
        };
        if (self.len() as f64) * tail < 5.0 {
            log::warn!("critical value at alpha = {alpha} rests on fewer than 5 null samples in the tail");
        }
        let q = |p| stats::quantile_sorted(&self.sorted, p);
        Ok(match side {
            Side::Lower => CriticalValue::Lower(q(alpha)),
            Side::Upper => CriticalValue::Upper(q(1.0 - alpha)),
            Side::TwoSided => CriticalValue::TwoSided(q(alpha / 2.0), q(1.0 - alpha / 2.0)),
        })
    }

    pub fn summary(&self) -> NullSummary {
        NullSummary {
            count: self.len(),
            mean: stats::mean(&self.sorted),
            sd: if self.len() > 1 { stats::sd(&self.sorted) } else { 0.0 },
            quantiles: SUMMARY_LEVELS
                .iter()
                .map(|&p| (p, stats::quantile_sorted(&self.sorted, p)))
                .collect(),
        }
    }

    /// Equal-width histogram over the central 99.8% of the samples, with the
    /// outer bins absorbing the tails.
    pub fn histogram(&self, bins: usize) -> Histogram {
        Histogram::of(&self.sorted, bins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CriticalValue {
    Lower(f64),
    Upper(f64),
    TwoSided(f64, f64),
}

impl CriticalValue {
    /// Whether `observed` falls in the rejection region.
    pub fn rejects(&self, observed: f64) -> bool {
        match *self {
            CriticalValue::Lower(t) => observed <= t,
            CriticalValue::Upper(t) => observed >= t,
            CriticalValue::TwoSided(lo, hi) => observed <= lo || observed >= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NullSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub quantiles: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn of(sorted: &[f64], bins: usize) -> Histogram {
        let bins = bins.max(1);
        let lo = stats::quantile_sorted(sorted, 0.001);
        let hi = stats::quantile_sorted(sorted, 0.999);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0; bins];
        for &v in sorted {
            let b = ((v - lo) / width).floor();
            counts[(b.max(0.0) as usize).min(bins - 1)] += 1;
        }
        Histogram {
            edges: (0..=bins).map(|i| lo + width * i as f64).collect(),
            counts,
        }
    }
}

/// `s` null statistics `T(y₀)` with `y₀ ~ π(y | θ₀)`, using the model's
/// default data size. Draw `i` uses `seed.child(i)`; if the statistic is
/// undefined on it, stream `seed.child(i).child(r)` is tried for
/// `r = 1, 2, …` up to [`RETRY_CAP`].
pub fn simulate_null(
    model: &dyn Model,
    theta0: &[f64],
    stat: &DataStatistic,
    s: usize,
    seed: Seed,
) -> Result<NullDistribution> {
    if s == 0 {
        return Err(Error::invalid("at least one null draw is required"));
    }
    if s < 100 {
        log::warn!("simulation test with only {s} null draws");
    }
    model.check_theta(theta0)?;
    let n = model.data_shape().n;
    let draws = par::try_map_indexed(s, |i| {
        let base = seed.child(i as u64);
        for r in 0..=RETRY_CAP {
            let stream = if r == 0 { base } else { base.child(r as u64) };
            let y = model.draw_data(theta0, n, &mut stream.rng()).map_err(|e| e.at(i))?;
            if let Some(t) = stat.eval(&y) {
                return Ok((t, r));
            }
        }
        Err(Error::UndefinedStatistic(stat.name()).at(i))
    })?;
    let undefined = draws.iter().map(|&(_, r)| r).sum();
    let mut null = NullDistribution::new(draws.into_iter().map(|(t, _)| t).collect())?;
    null.undefined_draws = undefined;
    Ok(null)
}

/// Normalized-rank p-value of `observed` within `null_samples`.
pub fn simulation_pvalue(observed: f64, null_samples: &[f64], side: Side, seed: Seed) -> Result<f64> {
    Ok(NullDistribution::new(null_samples.to_vec())?.pvalue(observed, side, seed))
}

pub fn critical_value(null_samples: &[f64], alpha: f64, side: Side) -> Result<CriticalValue> {
    NullDistribution::new(null_samples.to_vec())?.critical_value(alpha, side)
}

/// Analytic p-value of a t statistic with `df` degrees of freedom.
pub fn t_test_pvalue(t: f64, df: f64, side: Side) -> f64 {
    let lower = special::student_t_cdf(t, df);
    match side {
        Side::Lower => lower,
        Side::Upper => 1.0 - lower,
        Side::TwoSided => (2.0 * lower.min(1.0 - lower)).min(1.0),
    }
}

#[derive(Debug, Clone)]
pub struct SimTestConfig {
    pub statistic: DataStatistic,
    pub side: Side,
    pub s: usize,
    pub alphas: Vec<f64>,
    pub seed: Seed,
}

impl SimTestConfig {
    pub fn new(statistic: DataStatistic, side: Side, s: usize, seed: Seed) -> Self {
        SimTestConfig {
            statistic,
            side,
            s,
            alphas: vec![0.01, 0.05, 0.1],
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestReport {
    pub statistic: String,
    pub side: Side,
    pub observed_stat: f64,
    pub p_value: f64,
    /// Smallest nonzero p-value the null sample can resolve, 1/S. A
    /// p-value of 0 means "below resolution".
    pub resolution: f64,
    pub critical_values: Vec<(f64, CriticalValue)>,
    pub null_summary: NullSummary,
    pub null_histogram: Histogram,
    pub undefined_draws: usize,
    /// Set when the two-sided rule 2·min(lower, upper) was applied.
    pub two_sided_rule: Option<String>,
}

/// Simulates the null at `theta0` and tests `y_obs` against it.
///
/// The null uses stream `cfg.seed.named("null")` and tie-breaking uses
/// `cfg.seed.named("ties")`.
pub fn run_simulation_test(
    model: &dyn Model,
    theta0: &[f64],
    y_obs: &Dataset,
    cfg: &SimTestConfig,
) -> Result<TestReport> {
    let observed = cfg
        .statistic
        .eval(y_obs)
        .ok_or_else(|| Error::UndefinedStatistic(cfg.statistic.name()))?;
    let null = simulate_null(model, theta0, &cfg.statistic, cfg.s, cfg.seed.named("null"))?;
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    let critical_values = alphas
        .iter()
        .map(|&a| Ok((a, null.critical_value(a, cfg.side)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TestReport {
        statistic: cfg.statistic.name(),
        side: cfg.side,
        observed_stat: observed,
        p_value: null.pvalue(observed, cfg.side, cfg.seed.named("ties")),
        resolution: 1.0 / null.len() as f64,
        critical_values,
        null_summary: null.summary(),
        null_histogram: null.histogram(50),
        undefined_draws: null.undefined_draws,
        two_sided_rule: (cfg.side == Side::TwoSided).then(|| "2*min(lower, upper), capped at 1".to_string()),
    })
}
