//! Calibration and accuracy studies by nested simulation: Bayesian SBC,
//! frequentist calibration of sampling-distribution approximations, power
//! analysis, sharpness and point-estimator accuracy.

use alloc::sync::Arc;
use core::fmt;

use rand::Rng;

use crate::approx::Approximator;
use crate::data::{Dataset, ParamDraws};
use crate::diagnostics::{uniformity_test, PValueSet, UniformityVerdict, DEFAULT_BINS};
use crate::model::Model;
use crate::prelude::*;
use crate::rng::Seed;
use crate::simtest::{simulate_null, NullDistribution, Side};
use crate::statistic::{DataStatistic, ParamStatistic};
use crate::{par, special, stats, Error, Result};

pub const DEFAULT_S: usize = 1000;
pub const DEFAULT_M: usize = 99;

/// `(1/M)·#{T⁽ᵐ⁾ < T*}` plus each tie counted with probability ½.
pub fn sbc_pvalue(target_true: f64, target_draws: &[f64], seed: Seed) -> Result<f64> {
    if target_draws.is_empty() {
        return Err(Error::invalid("SBC p-value needs at least one draw"));
    }
    let below = target_draws.iter().filter(|&&t| t < target_true).count();
    let ties = target_draws.iter().filter(|&&t| t == target_true).count();
    let from_ties = if ties == 0 {
        0
    } else {
        let mut rng = seed.rng();
        (0..ties).filter(|_| rng.random::<bool>()).count()
    };
    Ok((below + from_ties) as f64 / target_draws.len() as f64)
}

#[derive(Debug, Clone)]
pub struct SbcConfig {
    pub s: usize,
    pub m: usize,
    /// Defaults to every parameter component.
    pub targets: Vec<ParamStatistic>,
    pub bins: usize,
    pub seed: Seed,
}

impl SbcConfig {
    pub fn new(s: usize, m: usize, seed: Seed) -> Self {
        SbcConfig {
            s,
            m,
            targets: Vec::new(),
            bins: DEFAULT_BINS,
            seed,
        }
    }

    pub fn with_targets(mut self, targets: Vec<ParamStatistic>) -> Self {
        self.targets = targets;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.s < 2 || self.m < 1 {
            return Err(Error::invalid(format!(
                "SBC needs S >= 2 and M >= 1, got S = {} and M = {}",
                self.s, self.m
            )));
        }
        if self.s < 50 || self.m < 9 {
            log::warn!(
                "SBC with S = {} and M = {} is below the recommended 50 and 9",
                self.s,
                self.m
            );
        }
        Ok(())
    }

    pub(crate) fn targets_for(&self, model: &dyn Model) -> Vec<ParamStatistic> {
        if self.targets.is_empty() {
            ParamStatistic::all_components(model.param_dim())
        } else {
            self.targets.clone()
        }
    }
}

impl Default for SbcConfig {
    fn default() -> Self {
        SbcConfig::new(DEFAULT_S, DEFAULT_M, Seed(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetCalibration {
    pub target: String,
    pub pvalues: PValueSet,
    pub verdict: UniformityVerdict,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coverage {
    pub level: f64,
    pub covered: usize,
    pub total: usize,
    pub rate: f64,
    pub mc_se: f64,
}

impl Coverage {
    fn new(level: f64, covered: usize, total: usize) -> Self {
        let rate = covered as f64 / total as f64;
        Coverage {
            level,
            covered,
            total,
            rate,
            mc_se: (rate * (1.0 - rate) / total as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationResult {
    pub model: String,
    pub approximator: String,
    pub s: usize,
    /// Draws per simulation (M or D), when the p-values are rank based.
    pub m: Option<usize>,
    pub targets: Vec<TargetCalibration>,
    pub coverage: Option<Coverage>,
    /// Simulations skipped because the estimator failed.
    pub skipped: usize,
    pub notes: Vec<String>,
}

impl CalibrationResult {
    pub fn target(&self, name: &str) -> Option<&TargetCalibration> {
        self.targets.iter().find(|t| t.target == name)
    }
}

/// Assembles per-target p-value sets and verdicts from per-simulation rows.
pub(crate) fn assemble_targets(
    names: &[String],
    rows: &[Vec<f64>],
    granularity: Option<usize>,
    bins: usize,
) -> Result<Vec<TargetCalibration>> {
    names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let pvalues = PValueSet::new(rows.iter().map(|r| r[k]).collect(), granularity)?;
            let verdict = uniformity_test(&pvalues, bins.min(pvalues.len()).max(2))?;
            Ok(TargetCalibration {
                target: name.clone(),
                pvalues,
                verdict,
            })
        })
        .collect()
}

/// SBC p-values of one simulation for every target.
pub(crate) fn target_pvalues(
    targets: &[ParamStatistic],
    truth: &[f64],
    draws: &ParamDraws,
    seed: Seed,
) -> Result<Vec<f64>> {
    targets
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let values: Vec<f64> = draws.rows().map(|row| t.eval(row)).collect();
            sbc_pvalue(t.eval(truth), &values, seed.child(k as u64))
        })
        .collect()
}

/// Simulation-based calibration.
///
/// Simulation `s` uses `seed.child(s)` with sub-streams `child(0)` for
/// θ* ~ π(θ), `child(1)` for y ~ π(y | θ*), `child(2)` for the approximator
/// and `child(3)` for tie-breaking. The streams do not depend on the
/// approximator, so different approximators see the same (θ*, y) pairs.
pub fn run_sbc(model: &dyn Model, approx: &Approximator, cfg: &SbcConfig) -> Result<CalibrationResult> {
    cfg.validate()?;
    approx.check_model(model)?;
    let targets = cfg.targets_for(model);
    let n = model.data_shape().n;
    let rows = par::try_map_indexed(cfg.s, |s| {
        let seed = cfg.seed.child(s as u64);
        (|| {
            let truth = model.draw_prior(&mut seed.child(0).rng())?;
            let y = model.draw_data(&truth, n, &mut seed.child(1).rng())?;
            let draws = approx.approximate_n(model, &y, cfg.m, seed.child(2))?;
            target_pvalues(&targets, &truth, &draws, seed.child(3))
        })()
        .map_err(|e| e.at(s))
    })?;
    let names: Vec<String> = targets.iter().map(ParamStatistic::name).collect();
    Ok(CalibrationResult {
        model: model.name().to_string(),
        approximator: approx.name().to_string(),
        s: cfg.s,
        m: Some(cfg.m),
        targets: assemble_targets(&names, &rows, Some(cfg.m), cfg.bins)?,
        coverage: None,
        skipped: 0,
        notes: Vec::new(),
    })
}

/// A point estimate `T̂(y)` with optional standard error and degrees of
/// freedom for pivot-based sampling distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: Option<f64>,
    pub df: Option<f64>,
}

impl Estimate {
    pub fn point(value: f64) -> Self {
        Estimate {
            value,
            se: None,
            df: None,
        }
    }
}

type EstimatorFn = Arc<dyn Fn(&Dataset) -> Option<Estimate> + Send + Sync>;

/// A point estimator `T̂(y)` of the scalar target `T(θ)`.
#[derive(Clone)]
pub struct EstimatorSpec {
    pub name: String,
    pub target: ParamStatistic,
    estimator: EstimatorFn,
    /// Level of the central interval whose coverage is reported.
    pub interval: Option<f64>,
}

impl fmt::Debug for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimatorSpec")
            .field("name", &self.name)
            .field("target", &self.target)
            .field("interval", &self.interval)
            .finish()
    }
}

impl EstimatorSpec {
    pub fn custom(
        name: &str,
        target: ParamStatistic,
        f: impl Fn(&Dataset) -> Option<Estimate> + Send + Sync + 'static,
    ) -> Self {
        EstimatorSpec {
            name: name.to_string(),
            target,
            estimator: Arc::new(f),
            interval: None,
        }
    }

    pub fn with_interval(mut self, level: f64) -> Self {
        self.interval = Some(level);
        self
    }

    /// Sample mean of the first column, for the parameter component
    /// `component`; se = sd/√N with N − 1 degrees of freedom.
    pub fn sample_mean(component: usize) -> Self {
        Self::custom("sample_mean", ParamStatistic::Component(component), |y| {
            let x = y.column(0);
            let n = x.len() as f64;
            let se = (x.len() > 1).then(|| stats::sd(&x) / n.sqrt());
            Some(Estimate {
                value: stats::mean(&x),
                se,
                df: (x.len() > 1).then_some(n - 1.0),
            })
        })
    }

    /// Difference of group means (group 1 − group 0) with the pooled-variance
    /// standard error of the two-sample t-test.
    pub fn mean_difference(target: ParamStatistic) -> Self {
        Self::custom("mean_difference", target, |y| {
            let a = y.group_values(0);
            let b = y.group_values(1);
            if a.len() < 2 || b.len() < 2 {
                return None;
            }
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let pooled = ((na - 1.0) * stats::variance(&a) + (nb - 1.0) * stats::variance(&b)) / (na + nb - 2.0);
            let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
            (se > 0.0).then(|| Estimate {
                value: stats::mean(&b) - stats::mean(&a),
                se: Some(se),
                df: Some(na + nb - 2.0),
            })
        })
    }

    /// Analytic posterior mean of a conjugate model.
    pub fn posterior_mean(model: Arc<dyn Model>) -> Self {
        Self::custom("posterior_mean", ParamStatistic::Component(0), move |y| {
            model.posterior(y).ok().map(|p| Estimate::point(p.mean()))
        })
    }

    pub fn estimate(&self, y: &Dataset) -> Option<Estimate> {
        (self.estimator)(y).filter(|e| e.value.is_finite())
    }
}

/// An approximation `q(T̂ | T*)` of the sampling distribution, centered at
/// the observed estimate: p = P(X ≤ T*) for X ~ q.
#[derive(Debug, Clone)]
pub enum SamplingApproximation {
    /// Normal with a known standard deviation.
    Normal { sd: f64 },
    /// Normal with the estimator's own standard error.
    NormalPlugIn,
    /// Student t with the estimator's standard error and degrees of freedom.
    StudentT,
    /// Empirical distribution of `T(θ)` over approximator draws given y.
    Draws(Approximator),
}

impl SamplingApproximation {
    pub fn name(&self) -> String {
        match self {
            SamplingApproximation::Normal { .. } => "normal".into(),
            SamplingApproximation::NormalPlugIn => "normal_plug_in".into(),
            SamplingApproximation::StudentT => "student_t".into(),
            SamplingApproximation::Draws(a) => a.name().into(),
        }
    }

    /// `(p, covered)` for one dataset; `None` when the estimator is
    /// undefined or lacks what the approximation needs.
    fn evaluate(
        &self,
        model: &dyn Model,
        est: &EstimatorSpec,
        truth: f64,
        y: &Dataset,
        seed: Seed,
    ) -> Result<Option<(f64, Option<bool>)>> {
        let pivot = |e: &Estimate, cdf: &dyn Fn(f64) -> f64, quantile: &dyn Fn(f64) -> f64, scale: f64| {
            let p = cdf((truth - e.value) / scale);
            let covered = est.interval.map(|level| {
                let h = quantile(0.5 + level / 2.0) * scale;
                (e.value - h..=e.value + h).contains(&truth)
            });
            (p, covered)
        };
        match self {
            SamplingApproximation::Draws(approx) => {
                let draws = approx.approximate(model, y, seed.child(0))?;
                let values: Vec<f64> = draws.rows().map(|r| est.target.eval(r)).collect();
                let p = sbc_pvalue(truth, &values, seed.child(1))?;
                let covered = est.interval.map(|level| {
                    let sorted = stats::sorted(&values);
                    let lo = stats::quantile_sorted(&sorted, 0.5 - level / 2.0);
                    let hi = stats::quantile_sorted(&sorted, 0.5 + level / 2.0);
                    (lo..=hi).contains(&truth)
                });
                Ok(Some((p, covered)))
            }
            _ => {
                let Some(e) = est.estimate(y) else { return Ok(None) };
                Ok(match self {
                    SamplingApproximation::Normal { sd } => {
                        Some(pivot(&e, &special::normal_cdf, &special::normal_quantile, *sd))
                    }
                    SamplingApproximation::NormalPlugIn => {
                        e.se.filter(|se| *se > 0.0)
                            .map(|se| pivot(&e, &special::normal_cdf, &special::normal_quantile, se))
                    }
                    SamplingApproximation::StudentT => match (e.se, e.df) {
                        (Some(se), Some(df)) if se > 0.0 && df > 0.0 => Some(pivot(
                            &e,
                            &|t| special::student_t_cdf(t, df),
                            &|p| special::student_t_quantile(p, df),
                            se,
                        )),
                        _ => None,
                    },
                    SamplingApproximation::Draws(_) => unreachable!(),
                })
            }
        }
    }
}

/// Frequentist calibration at a fixed θ*.
///
/// Simulation `s` draws y from `seed.child(s).child(0)`; the sampling
/// approximation uses `seed.child(s).child(1)`. Datasets on which the
/// estimator is undefined are skipped and counted.
pub fn run_frequentist_calibration(
    model: &dyn Model,
    theta_star: &[f64],
    est: &EstimatorSpec,
    dist: &SamplingApproximation,
    s: usize,
    seed: Seed,
) -> Result<CalibrationResult> {
    if s < 2 {
        return Err(Error::invalid("frequentist calibration needs at least two simulations"));
    }
    model.check_theta(theta_star)?;
    if let SamplingApproximation::Normal { sd } = dist {
        if sd.is_nan() || *sd <= 0.0 {
            return Err(Error::invalid("sampling sd must be positive"));
        }
    }
    let truth = est.target.eval(theta_star);
    let n = model.data_shape().n;
    let outcomes = par::try_map_indexed(s, |i| {
        let seed = seed.child(i as u64);
        (|| {
            let y = model.draw_data(theta_star, n, &mut seed.child(0).rng())?;
            dist.evaluate(model, est, truth, &y, seed.child(1))
        })()
        .map_err(|e| e.at(i))
    })?;
    let kept: Vec<(f64, Option<bool>)> = outcomes.iter().flatten().copied().collect();
    let skipped = s - kept.len();
    if kept.len() < 2 {
        return Err(Error::invalid(format!("estimator failed on {skipped} of {s} datasets")));
    }
    let granularity = match dist {
        SamplingApproximation::Draws(a) => Some(a.draws),
        _ => None,
    };
    let rows: Vec<Vec<f64>> = kept.iter().map(|(p, _)| vec![*p]).collect();
    let coverage = est.interval.map(|level| {
        let covered = kept.iter().filter(|(_, c)| *c == Some(true)).count();
        Coverage::new(level, covered, kept.len())
    });
    Ok(CalibrationResult {
        model: model.name().to_string(),
        approximator: dist.name(),
        s,
        m: granularity,
        targets: assemble_targets(&[est.target.name()], &rows, granularity, DEFAULT_BINS)?,
        coverage,
        skipped,
        notes: Vec::new(),
    })
}

/// Where the data-generating parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSource {
    Fixed(Vec<f64>),
    /// A fresh draw from the model prior for every simulation.
    Prior,
}

impl ThetaSource {
    fn draw(&self, model: &dyn Model, seed: Seed) -> Result<Vec<f64>> {
        match self {
            ThetaSource::Fixed(theta) => Ok(theta.clone()),
            ThetaSource::Prior => model.draw_prior(&mut seed.rng()),
        }
    }

    fn check(&self, model: &dyn Model) -> Result<()> {
        match self {
            ThetaSource::Fixed(theta) => model.check_theta(theta),
            ThetaSource::Prior if !model.capabilities().prior => Err(Error::capability(model.name(), "prior sampling")),
            ThetaSource::Prior => Ok(()),
        }
    }
}

/// How a dataset is turned into a p-value against the null θ₀.
#[derive(Debug, Clone)]
pub enum TestProcedure {
    /// z-test of the sample mean against `null_mean` with known `sd` per
    /// observation.
    ZTest { null_mean: f64, sd: f64, side: Side },
    /// Two-sample pooled-variance t-test.
    PooledTTest { side: Side },
    /// Simulation-based test with `s` null draws at `theta0`.
    Simulation {
        statistic: DataStatistic,
        theta0: Vec<f64>,
        side: Side,
        s: usize,
    },
}

impl TestProcedure {
    pub fn name(&self) -> &'static str {
        match self {
            TestProcedure::ZTest { .. } => "z_test",
            TestProcedure::PooledTTest { .. } => "pooled_t_test",
            TestProcedure::Simulation { .. } => "simulation_test",
        }
    }
}

/// A test procedure prepared for repeated use; the simulated null is drawn
/// once.
enum PreparedTest<'a> {
    Z {
        null_mean: f64,
        sd: f64,
        side: Side,
    },
    T {
        side: Side,
    },
    Sim {
        statistic: &'a DataStatistic,
        null: NullDistribution,
        side: Side,
    },
}

impl<'a> PreparedTest<'a> {
    fn new(model: &dyn Model, test: &'a TestProcedure, seed: Seed) -> Result<Self> {
        Ok(match test {
            TestProcedure::ZTest { null_mean, sd, side } => {
                if sd.is_nan() || *sd <= 0.0 {
                    return Err(Error::invalid("z-test sd must be positive"));
                }
                PreparedTest::Z {
                    null_mean: *null_mean,
                    sd: *sd,
                    side: *side,
                }
            }
            TestProcedure::PooledTTest { side } => PreparedTest::T { side: *side },
            TestProcedure::Simulation {
                statistic,
                theta0,
                side,
                s,
            } => PreparedTest::Sim {
                statistic,
                null: simulate_null(model, theta0, statistic, *s, seed)?,
                side: *side,
            },
        })
    }

    fn pvalue(&self, y: &Dataset, seed: Seed) -> Option<f64> {
        match self {
            PreparedTest::Z { null_mean, sd, side } => {
                let x = y.column(0);
                let z = (stats::mean(&x) - null_mean) / (sd / (x.len() as f64).sqrt());
                let lower = special::normal_cdf(z);
                Some(match side {
                    Side::Lower => lower,
                    Side::Upper => special::normal_cdf(-z),
                    Side::TwoSided => (2.0 * lower.min(1.0 - lower)).min(1.0),
                })
            }
            PreparedTest::T { side } => {
                let e = EstimatorSpec::mean_difference(ParamStatistic::Component(0)).estimate(y)?;
                Some(crate::simtest::t_test_pvalue(e.value / e.se?, e.df?, *side))
            }
            PreparedTest::Sim { statistic, null, side } => Some(null.pvalue(statistic.eval(y)?, *side, seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerResult {
    pub test: String,
    pub alpha: f64,
    pub power: f64,
    pub se: f64,
    pub pvalues: PValueSet,
    /// Datasets on which the test statistic was undefined.
    pub skipped: usize,
}

/// Fraction of datasets generated under `theta_star` whose p-value against
/// the null is at most `alpha`.
///
/// The simulated null (if any) uses `seed.named("null")`; dataset `s` uses
/// `seed.child(s)` with `child(0)` for θ, `child(1)` for y and `child(2)` for
/// tie-breaking.
pub fn power_analysis(
    model: &dyn Model,
    theta_star: &ThetaSource,
    test: &TestProcedure,
    alpha: f64,
    s: usize,
    seed: Seed,
) -> Result<PowerResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if s == 0 {
        return Err(Error::invalid("power analysis needs at least one simulation"));
    }
    theta_star.check(model)?;
    let prepared = PreparedTest::new(model, test, seed.named("null"))?;
    let n = model.data_shape().n;
    let pvalues = par::try_map_indexed(s, |i| {
        let seed = seed.child(i as u64);
        (|| {
            let theta = theta_star.draw(model, seed.child(0))?;
            let y = model.draw_data(&theta, n, &mut seed.child(1).rng())?;
            Ok(prepared.pvalue(&y, seed.child(2)))
        })()
        .map_err(|e: Error| e.at(i))
    })?;
    let kept: Vec<f64> = pvalues.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::UndefinedStatistic(test.name().to_string()));
    }
    let power = kept.iter().filter(|&&p| p <= alpha).count() as f64 / kept.len() as f64;
    Ok(PowerResult {
        test: test.name().to_string(),
        alpha,
        power,
        se: (power * (1.0 - power) / kept.len() as f64).sqrt(),
        skipped: s - kept.len(),
        pvalues: PValueSet::continuous(kept)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sharpness {
    pub level: f64,
    /// Mean central-interval width per parameter component.
    pub mean_width: Vec<f64>,
    pub mc_se: Vec<f64>,
}

/// Average width of central `level` intervals from the approximator over
/// `s` prior-predictive datasets. Dataset `i` uses `seed.child(i)`.
pub fn sharpness(approx: &Approximator, model: &dyn Model, level: f64, s: usize, seed: Seed) -> Result<Sharpness> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("interval level must be in (0, 1), got {level}")));
    }
    if s == 0 || approx.draws < 2 {
        return Err(Error::invalid("sharpness needs at least one dataset and two draws"));
    }
    approx.check_model(model)?;
    let n = model.data_shape().n;
    let dim = model.param_dim();
    let widths = par::try_map_indexed(s, |i| {
        let seed = seed.child(i as u64);
        (|| {
            let theta = model.draw_prior(&mut seed.child(0).rng())?;
            let y = model.draw_data(&theta, n, &mut seed.child(1).rng())?;
            let draws = approx.approximate(model, &y, seed.child(2))?;
            Ok((0..dim)
                .map(|j| {
                    let col = stats::sorted(&draws.column(j));
                    stats::quantile_sorted(&col, 0.5 + level / 2.0) - stats::quantile_sorted(&col, 0.5 - level / 2.0)
                })
                .collect::<Vec<f64>>())
        })()
        .map_err(|e: Error| e.at(i))
    })?;
    let per_dim: Vec<Vec<f64>> = (0..dim).map(|j| widths.iter().map(|w| w[j]).collect()).collect();
    Ok(Sharpness {
        level,
        mean_width: per_dim.iter().map(|w| stats::mean(w)).collect(),
        mc_se: per_dim
            .iter()
            .map(|w| if w.len() > 1 { stats::mc_se(w) } else { 0.0 })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Distance {
    Squared,
    Absolute,
}

impl Distance {
    pub fn eval(self, estimate: f64, truth: f64) -> f64 {
        match self {
            Distance::Squared => (estimate - truth) * (estimate - truth),
            Distance::Absolute => (estimate - truth).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Accuracy {
    pub estimator: String,
    pub distance: Distance,
    pub mean: f64,
    pub mc_se: f64,
    pub s: usize,
    pub skipped: usize,
}

/// `(1/S)·Σ D(T̂(y⁽ˢ⁾), T(θ⁽ˢ⁾))` with its Monte Carlo standard error.
/// Simulation `i` uses `seed.child(i)`: `child(0)` for θ, `child(1)` for y.
pub fn estimator_accuracy(
    model: &dyn Model,
    theta: &ThetaSource,
    est: &EstimatorSpec,
    distance: Distance,
    s: usize,
    seed: Seed,
) -> Result<Accuracy> {
    if s < 2 {
        return Err(Error::invalid("accuracy needs at least two simulations"));
    }
    theta.check(model)?;
    let n = model.data_shape().n;
    let d = par::try_map_indexed(s, |i| {
        let seed = seed.child(i as u64);
        (|| {
            let th = theta.draw(model, seed.child(0))?;
            let y = model.draw_data(&th, n, &mut seed.child(1).rng())?;
            Ok(est.estimate(&y).map(|e| distance.eval(e.value, est.target.eval(&th))))
        })()
        .map_err(|e: Error| e.at(i))
    })?;
    let kept: Vec<f64> = d.into_iter().flatten().collect();
    if kept.len() < 2 {
        return Err(Error::UndefinedStatistic(est.name.clone()));
    }
    Ok(Accuracy {
        estimator: est.name.clone(),
        distance,
        mean: stats::mean(&kept),
        mc_se: stats::mc_se(&kept),
        skipped: s - kept.len(),
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NormalNormal;

    #[test]
    fn direct_counts() {
        assert_eq!(sbc_pvalue(0.5, &[0.1, 0.2, 0.9, 1.0], Seed(0)).unwrap(), 0.5);
        assert_eq!(sbc_pvalue(-1.0, &[0.1, 0.2], Seed(0)).unwrap(), 0.0);
        assert_eq!(sbc_pvalue(9.0, &[0.1, 0.2], Seed(0)).unwrap(), 1.0);
        assert!(sbc_pvalue(0.0, &[], Seed(0)).is_err());
        let tied = sbc_pvalue(1.0, &[1.0; 10], Seed(4)).unwrap();
        assert!((0.0..=1.0).contains(&tied));
    }

    #[test]
    fn constant_estimator_has_zero_loss() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 10).unwrap();
        let est = EstimatorSpec::custom("truth", ParamStatistic::Component(0), |_| Some(Estimate::point(0.3)));
        let a = estimator_accuracy(&m, &ThetaSource::Fixed(vec![0.3]), &est, Distance::Squared, 50, Seed(1)).unwrap();
        assert_eq!(a.mean, 0.0);
    }

    #[test]
    fn sbc_is_reproducible() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 5).unwrap();
        let cfg = SbcConfig::new(60, 9, Seed(8));
        let a = run_sbc(&m, &Approximator::exact(9), &cfg).unwrap();
        let b = run_sbc(&m, &Approximator::exact(9), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.targets[0].pvalues.len(), 60);
        assert_eq!(a.targets[0].pvalues.granularity(), Some(9));
    }

    #[test]
    fn invalid_sbc_config() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 5).unwrap();
        assert!(run_sbc(&m, &Approximator::exact(9), &SbcConfig::new(1, 9, Seed(0))).is_err());
    }
}
