//! Predictive checks: prior pushforward checks, plug-in and posterior
//! predictive checks, and posterior SBC.
//!
//! Observation models are i.i.d. given θ, so replications are drawn from
//! π(y′ | θ) without further conditioning on y_obs.

use rand::seq::index;

use crate::approx::Approximator;
use crate::calibration::{assemble_targets, target_pvalues, CalibrationResult};
use crate::data::{Dataset, ParamDraws};
use crate::diagnostics::DEFAULT_BINS;
use crate::model::Model;
use crate::prelude::*;
use crate::rng::Seed;
use crate::simtest::{NullDistribution, Side};
use crate::statistic::{DataStatistic, Discrepancy, ParamStatistic};
use crate::{par, Error, Result};

/// Closed interval of plausible values of a summary statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlausibleRegion {
    pub lower: f64,
    pub upper: f64,
}

impl PlausibleRegion {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::invalid(format!("empty plausible region [{lower}, {upper}]")));
        }
        Ok(PlausibleRegion { lower, upper })
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictiveResult {
    pub statistic: String,
    pub replication_stats: Vec<f64>,
    pub observed_stat: Option<f64>,
    pub ppp: Option<f64>,
    pub side: Option<Side>,
    pub fraction_in_region: Option<f64>,
    /// Replications on which the statistic was undefined (left out).
    pub undefined: usize,
}

/// Parameters behind a pushforward check.
#[derive(Debug, Clone, PartialEq)]
pub enum PushforwardSource {
    Prior,
    /// A finite set of plausible parameter values, cycled through in order.
    Plausible(Vec<Vec<f64>>),
}

/// Fraction of prior-predictive datasets whose statistic lies in `region`.
/// Replication `i` uses `seed.child(i)`: `child(0)` for θ, `child(1)` for y.
pub fn prior_pushforward_check(
    model: &dyn Model,
    stat: &DataStatistic,
    region: &PlausibleRegion,
    s: usize,
    seed: Seed,
) -> Result<PredictiveResult> {
    pushforward_check(model, &PushforwardSource::Prior, stat, region, s, seed)
}

pub fn pushforward_check(
    model: &dyn Model,
    source: &PushforwardSource,
    stat: &DataStatistic,
    region: &PlausibleRegion,
    s: usize,
    seed: Seed,
) -> Result<PredictiveResult> {
    if s == 0 {
        return Err(Error::invalid("at least one replication is required"));
    }
    match source {
        PushforwardSource::Prior if !model.capabilities().prior => {
            return Err(Error::capability(model.name(), "prior sampling"));
        }
        PushforwardSource::Plausible(thetas) => {
            if thetas.is_empty() {
                return Err(Error::invalid("empty plausible parameter set"));
            }
            thetas.iter().try_for_each(|t| model.check_theta(t))?;
        }
        PushforwardSource::Prior => {}
    }
    let n = model.data_shape().n;
    let values = par::try_map_indexed(s, |i| {
        let seed = seed.child(i as u64);
        (|| {
            let theta = match source {
                PushforwardSource::Prior => model.draw_prior(&mut seed.child(0).rng())?,
                PushforwardSource::Plausible(thetas) => thetas[i % thetas.len()].clone(),
            };
            let y = model.draw_data(&theta, n, &mut seed.child(1).rng())?;
            Ok(stat.eval(&y))
        })()
        .map_err(|e: Error| e.at(i))
    })?;
    let defined: Vec<f64> = values.into_iter().flatten().collect();
    let undefined = s - defined.len();
    let inside = defined.iter().filter(|&&v| region.contains(v)).count();
    Ok(PredictiveResult {
        statistic: stat.name(),
        fraction_in_region: Some(inside as f64 / s as f64),
        replication_stats: defined,
        observed_stat: None,
        ppp: None,
        side: None,
        undefined,
    })
}

/// Observations per group in a replication of `y_obs`.
fn replication_size(model: &dyn Model, y_obs: &Dataset) -> usize {
    (y_obs.n() / model.data_shape().groups.max(1)).max(1)
}

/// Summarizes discrepancies `D(y_obs, y′)` of the replicated datasets. The
/// observed value is `D(y_obs, y_obs)`; the ppp is its normalized rank
/// among the replications and is omitted for a single replication.
fn summarize(
    stat: &Discrepancy,
    y_obs: &Dataset,
    reps: &[Dataset],
    side: Side,
    seed: Seed,
) -> Result<PredictiveResult> {
    let observed_base = stat
        .base()
        .eval(y_obs)
        .ok_or_else(|| Error::UndefinedStatistic(stat.name()))?;
    let observed = stat
        .eval_with_observed(observed_base, y_obs)
        .ok_or_else(|| Error::UndefinedStatistic(stat.name()))?;
    let defined: Vec<f64> = reps
        .iter()
        .filter_map(|y| stat.eval_with_observed(observed_base, y))
        .collect();
    let undefined = reps.len() - defined.len();
    let ppp = if defined.len() > 1 {
        Some(NullDistribution::new(defined.clone())?.pvalue(observed, side, seed))
    } else {
        None
    };
    Ok(PredictiveResult {
        statistic: stat.name(),
        replication_stats: defined,
        observed_stat: Some(observed),
        ppp,
        side: Some(side),
        fraction_in_region: None,
        undefined,
    })
}

/// Plug-in check: replications from π(y | θ̂). Replication `i` uses
/// `seed.child(i)`; ties in the ppp use `seed.named("ties")`.
pub fn frequentist_predictive_check(
    model: &dyn Model,
    theta_hat: &[f64],
    stat: &Discrepancy,
    y_obs: &Dataset,
    side: Side,
    s: usize,
    seed: Seed,
) -> Result<PredictiveResult> {
    if s == 0 {
        return Err(Error::invalid("at least one replication is required"));
    }
    model.check_theta(theta_hat)?;
    let n = replication_size(model, y_obs);
    let reps = par::try_map_indexed(s, |i| {
        model
            .draw_data(theta_hat, n, &mut seed.child(i as u64).rng())
            .map_err(|e| e.at(i))
    })?;
    summarize(stat, y_obs, &reps, side, seed.named("ties"))
}

/// `s` replicated datasets of `n` observations per group, one per posterior
/// draw. With more than `s` draws, `s` of them are chosen without
/// replacement using `seed.named("subsample")`. Dataset `i` uses
/// `seed.child(i)`.
pub fn posterior_predictive_sample(
    model: &dyn Model,
    posterior: &ParamDraws,
    s: usize,
    n: usize,
    seed: Seed,
) -> Result<Vec<Dataset>> {
    if s == 0 || n == 0 {
        return Err(Error::invalid("replication count and size must be positive"));
    }
    if posterior.len() < s {
        return Err(Error::invalid(format!(
            "{} posterior draws cannot support {s} replications",
            posterior.len()
        )));
    }
    let rows: Vec<usize> = if posterior.len() == s {
        (0..s).collect()
    } else {
        let mut rng = seed.named("subsample").rng();
        let mut picked = index::sample(&mut rng, posterior.len(), s).into_vec();
        picked.sort_unstable();
        picked
    };
    par::try_map_indexed(s, |i| {
        model
            .draw_data(posterior.row(rows[i]), n, &mut seed.child(i as u64).rng())
            .map_err(|e| e.at(i))
    })
}

/// Normalized rank of `observed` among the replication statistics.
pub fn posterior_predictive_pvalue(observed: f64, replication_stats: &[f64], side: Side, seed: Seed) -> Result<f64> {
    crate::simtest::simulation_pvalue(observed, replication_stats, side, seed)
}

/// Posterior predictive check of `y_obs` with draws from its posterior.
pub fn posterior_predictive_check(
    model: &dyn Model,
    posterior: &ParamDraws,
    stat: &Discrepancy,
    y_obs: &Dataset,
    side: Side,
    s: usize,
    seed: Seed,
) -> Result<PredictiveResult> {
    let reps = posterior_predictive_sample(model, posterior, s, replication_size(model, y_obs), seed)?;
    summarize(stat, y_obs, &reps, side, seed.named("ties"))
}

#[derive(Debug, Clone)]
pub struct PosteriorSbcConfig {
    pub s: usize,
    pub d: usize,
    /// Observations per group in each augmenting dataset; the model default
    /// when `None`.
    pub n_new: Option<usize>,
    pub targets: Vec<ParamStatistic>,
    pub bins: usize,
    pub seed: Seed,
}

impl PosteriorSbcConfig {
    pub fn new(s: usize, d: usize, seed: Seed) -> Self {
        PosteriorSbcConfig {
            s,
            d,
            n_new: None,
            targets: Vec::new(),
            bins: DEFAULT_BINS,
            seed,
        }
    }
}

/// SBC with the current posterior q(θ | y_obs) in the role of the prior.
///
/// The S reference values θ′ come from one call of the approximator under
/// test on y_obs (stream `seed.named("reference")`). Replication `s` then
/// uses `seed.child(s)`: `child(1)` for y′ ~ π(y | θ′), `child(2)` for the D
/// augmented draws from q(θ | y_obs, y′) and `child(3)` for tie-breaking.
pub fn run_posterior_sbc(
    model: &dyn Model,
    approx: &Approximator,
    y_obs: &Dataset,
    cfg: &PosteriorSbcConfig,
) -> Result<CalibrationResult> {
    if cfg.s < 2 || cfg.d < 1 {
        return Err(Error::invalid(format!(
            "posterior SBC needs S >= 2 and D >= 1, got S = {} and D = {}",
            cfg.s, cfg.d
        )));
    }
    if cfg.s < 50 || cfg.d < 9 {
        log::warn!(
            "posterior SBC with S = {} and D = {} is below the recommended 50 and 9",
            cfg.s,
            cfg.d
        );
    }
    approx.check_model(model)?;
    let targets = if cfg.targets.is_empty() {
        ParamStatistic::all_components(model.param_dim())
    } else {
        cfg.targets.clone()
    };
    let n_new = cfg.n_new.unwrap_or(model.data_shape().n);
    let reference = approx.approximate_n(model, y_obs, cfg.s, cfg.seed.named("reference"))?;
    let rows = par::try_map_indexed(cfg.s, |s| {
        let seed = cfg.seed.child(s as u64);
        (|| {
            let truth = reference.row(s);
            let y_new = model.draw_data(truth, n_new, &mut seed.child(1).rng())?;
            let augmented = y_obs.concat(&y_new)?;
            let draws = approx.approximate_n(model, &augmented, cfg.d, seed.child(2))?;
            target_pvalues(&targets, truth, &draws, seed.child(3))
        })()
        .map_err(|e| e.at(s))
    })?;
    let names: Vec<String> = targets.iter().map(ParamStatistic::name).collect();
    Ok(CalibrationResult {
        model: model.name().to_string(),
        approximator: approx.name().to_string(),
        s: cfg.s,
        m: Some(cfg.d),
        targets: assemble_targets(&names, &rows, Some(cfg.d), cfg.bins)?,
        coverage: None,
        skipped: 0,
        notes: vec!["reference values drawn from the approximator under test given y_obs".to_string()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DrawSource;
    use crate::model::{BetaBinomial, NormalNormal};

    #[test]
    fn pushforward_support() {
        let m = BetaBinomial::new(1.0, 1.0, 20, 1).unwrap();
        let all = PlausibleRegion::new(0.0, 20.0).unwrap();
        let none = PlausibleRegion::new(21.0, 22.0).unwrap();
        let r = prior_pushforward_check(&m, &DataStatistic::Sum, &all, 500, Seed(1)).unwrap();
        assert_eq!(r.fraction_in_region, Some(1.0));
        let r = prior_pushforward_check(&m, &DataStatistic::Sum, &none, 500, Seed(1)).unwrap();
        assert_eq!(r.fraction_in_region, Some(0.0));
        assert!(PlausibleRegion::new(1.0, 1.0).is_err());
    }

    #[test]
    fn replication_shape() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 5).unwrap();
        let post = ParamDraws::new(1, vec![0.1, 0.2, 0.3, 0.4], DrawSource::Posterior).unwrap();
        let reps = posterior_predictive_sample(&m, &post, 3, 5, Seed(2)).unwrap();
        assert_eq!(reps.len(), 3);
        assert!(reps.iter().all(|y| y.n() == 5));
        assert!(posterior_predictive_sample(&m, &post, 5, 5, Seed(2)).is_err());
    }

    #[test]
    fn point_mass_posterior_equals_plug_in() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 4).unwrap();
        let y = Dataset::from_values(vec![0.1, 0.5, -0.3, 0.2]).unwrap();
        let post = ParamDraws::new(1, vec![0.25; 50], DrawSource::Posterior).unwrap();
        let stat = Discrepancy::Difference(DataStatistic::Mean);
        let a = posterior_predictive_check(&m, &post, &stat, &y, Side::Lower, 50, Seed(3)).unwrap();
        let b = frequentist_predictive_check(&m, &[0.25], &stat, &y, Side::Lower, 50, Seed(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_replication_has_no_ppp() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 4).unwrap();
        let y = Dataset::from_values(vec![0.1, 0.5, -0.3, 0.2]).unwrap();
        let stat = Discrepancy::Difference(DataStatistic::Mean);
        let r = frequentist_predictive_check(&m, &[0.0], &stat, &y, Side::Lower, 1, Seed(4)).unwrap();
        assert_eq!(r.replication_stats.len(), 1);
        assert_eq!(r.ppp, None);
    }

    #[test]
    fn ppp_extremes() {
        let reps = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(
            posterior_predictive_pvalue(0.0, &reps, Side::Lower, Seed(0)).unwrap(),
            0.0
        );
        let mid = posterior_predictive_pvalue(3.0, &reps, Side::Lower, Seed(0)).unwrap();
        assert!((mid - 0.5).abs() <= 0.1 + 1e-12);
    }

    #[test]
    fn degenerate_posterior_sbc() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 3).unwrap();
        let y = Dataset::from_values(vec![0.3, 0.1, 0.8]).unwrap();
        let r = run_posterior_sbc(
            &m,
            &Approximator::exact(1),
            &y,
            &PosteriorSbcConfig::new(60, 1, Seed(6)),
        )
        .unwrap();
        let p = &r.targets[0].pvalues;
        assert!(p.values().iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(p.granularity(), Some(1));
    }
}
