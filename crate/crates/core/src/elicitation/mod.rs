//! Prior elicitation by simulation: hyperparameters λ of a parametric prior
//! are tuned until quantiles of model-implied statistics match the values
//! an expert stated.
//!
//! The loss is the sum of squared differences between simulated and expert
//! quantiles. It is evaluated with common random numbers: simulation `i`
//! always draws θ from stream `seed.child(i).child(0)` and y from
//! `seed.child(i).child(1)`, and the built-in families sample by inverse
//! CDF, so the loss is a deterministic and piecewise smooth function of λ.

mod nelder_mead;

pub use nelder_mead::{minimize, NelderMeadConfig, NelderMeadResult};

use alloc::sync::Arc;

use rand::Rng;

use crate::data::Dataset;
use crate::model::Transform;
use crate::prelude::*;
use crate::rng::Seed;
use crate::statistic::DataStatistic;
use crate::{par, special, stats, Error, Result};

/// Loss assigned to λ outside the family's domain.
pub const INVALID_LAMBDA_PENALTY: f64 = 1e10;

pub const DEFAULT_PROBES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

pub const LOSS_NAME: &str = "squared_error_sum";

/// A prior π(θ | λ) together with its observation model.
pub trait PriorFamily: Send + Sync {
    fn name(&self) -> &str;

    fn lambda_names(&self) -> Vec<&'static str>;

    fn lambda_dim(&self) -> usize {
        self.lambda_names().len()
    }

    /// Per-coordinate map of λ to unconstrained space.
    fn transforms(&self) -> Vec<Transform>;

    fn is_valid(&self, lambda: &[f64]) -> bool;

    /// One prior-predictive dataset: θ ~ π(θ | λ) from `theta_seed`, then
    /// y ~ π(y | θ) from `data_seed`.
    fn simulate(&self, lambda: &[f64], theta_seed: Seed, data_seed: Seed) -> Result<Dataset>;
}

/// θ ~ Beta(a, b), each of `n` observations ~ Binomial(trials, θ);
/// λ = (a, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBinomialFamily {
    pub trials: u64,
    pub n: usize,
}

impl PriorFamily for BetaBinomialFamily {
    fn name(&self) -> &str {
        "beta-binomial"
    }

    fn lambda_names(&self) -> Vec<&'static str> {
        vec!["a", "b"]
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log, Transform::Log]
    }

    fn is_valid(&self, lambda: &[f64]) -> bool {
        lambda.len() == 2 && lambda.iter().all(|v| v.is_finite() && *v > 0.0)
    }

    fn simulate(&self, lambda: &[f64], theta_seed: Seed, data_seed: Seed) -> Result<Dataset> {
        let u: f64 = theta_seed.rng().random();
        let theta = special::beta_quantile(u, lambda[0], lambda[1]);
        let mut rng = data_seed.rng();
        let values = (0..self.n)
            .map(|_| special::binomial_quantile(rng.random(), self.trials, theta) as f64)
            .collect();
        Dataset::from_values(values)
    }
}

/// θ ~ Normal(μ₀, τ₀), each of `n` observations ~ Normal(θ, σ);
/// λ = (μ₀, τ₀).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalNormalFamily {
    pub sigma: f64,
    pub n: usize,
}

fn standard_normal(rng: &mut crate::SimRng) -> f64 {
    // Open interval keeps the quantile finite.
    let u: f64 = rng.random();
    special::normal_quantile(u.clamp(1e-300, 1.0 - 1e-16))
}

impl PriorFamily for NormalNormalFamily {
    fn name(&self) -> &str {
        "normal-normal"
    }

    fn lambda_names(&self) -> Vec<&'static str> {
        vec!["mu0", "tau0"]
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity, Transform::Log]
    }

    fn is_valid(&self, lambda: &[f64]) -> bool {
        lambda.len() == 2 && lambda[0].is_finite() && lambda[1].is_finite() && lambda[1] > 0.0
    }

    fn simulate(&self, lambda: &[f64], theta_seed: Seed, data_seed: Seed) -> Result<Dataset> {
        let theta = lambda[0] + lambda[1] * standard_normal(&mut theta_seed.rng());
        let mut rng = data_seed.rng();
        let values = (0..self.n)
            .map(|_| theta + self.sigma * standard_normal(&mut rng))
            .collect();
        Dataset::from_values(values)
    }
}

#[derive(Clone)]
pub struct ElicitationProblem {
    pub family: Arc<dyn PriorFamily>,
    pub targets: Vec<DataStatistic>,
    pub probes: Vec<f64>,
    /// Target-major: all probes of target 0, then target 1, ...
    pub expert_stats: Vec<f64>,
    pub sims_per_eval: usize,
}

impl core::fmt::Debug for ElicitationProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ElicitationProblem")
            .field("family", &self.family.name())
            .field("targets", &self.targets)
            .field("probes", &self.probes)
            .field("expert_stats", &self.expert_stats)
            .field("sims_per_eval", &self.sims_per_eval)
            .finish()
    }
}

impl ElicitationProblem {
    pub fn new(
        family: Arc<dyn PriorFamily>,
        targets: Vec<DataStatistic>,
        probes: Vec<f64>,
        expert_stats: Vec<f64>,
        sims_per_eval: usize,
    ) -> Result<Self> {
        if targets.is_empty() || probes.is_empty() {
            return Err(Error::invalid("elicitation needs at least one target and one probe"));
        }
        if let Some(p) = probes.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("probe level {p} outside [0, 1]")));
        }
        if expert_stats.len() != targets.len() * probes.len() {
            return Err(Error::invalid(format!(
                "{} expert statistics for {} targets x {} probes",
                expert_stats.len(),
                targets.len(),
                probes.len()
            )));
        }
        if sims_per_eval < 100 {
            return Err(Error::invalid(format!(
                "sims_per_eval must be at least 100, got {sims_per_eval}"
            )));
        }
        Ok(ElicitationProblem {
            family,
            targets,
            probes,
            expert_stats,
            sims_per_eval,
        })
    }

    /// Statistics count versus λ dimension. More statistics than
    /// hyperparameters is necessary, not sufficient, for identifiability.
    pub fn identifiability(&self) -> Identifiability {
        let statistics = self.expert_stats.len();
        let lambda_dim = self.family.lambda_dim();
        Identifiability {
            statistics,
            lambda_dim,
            underdetermined: statistics < lambda_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Identifiability {
    pub statistics: usize,
    pub lambda_dim: usize,
    pub underdetermined: bool,
}

/// Model-implied statistics at λ over `sims` simulations, target-major.
pub fn model_implied_stats(
    family: &dyn PriorFamily,
    targets: &[DataStatistic],
    probes: &[f64],
    lambda: &[f64],
    sims: usize,
    seed: Seed,
) -> Result<Vec<f64>> {
    if !family.is_valid(lambda) {
        return Err(Error::Domain(format!("{} hyperparameters {lambda:?}", family.name())));
    }
    let per_sim = par::try_map_indexed(sims, |i| {
        let s = seed.child(i as u64);
        let y = family.simulate(lambda, s.child(0), s.child(1))?;
        targets
            .iter()
            .map(|t| t.eval(&y).ok_or_else(|| Error::UndefinedStatistic(t.name())))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok((0..targets.len())
        .flat_map(|k| {
            let sorted = stats::sorted(&per_sim.iter().map(|r| r[k]).collect::<Vec<_>>());
            probes
                .iter()
                .map(|&p| stats::quantile_sorted(&sorted, p))
                .collect::<Vec<_>>()
        })
        .collect())
}

/// Σ (T − T̂)² at λ; [`INVALID_LAMBDA_PENALTY`] when λ is invalid or the
/// simulation fails.
pub fn elicitation_loss(problem: &ElicitationProblem, lambda: &[f64], seed: Seed) -> f64 {
    match model_implied_stats(
        problem.family.as_ref(),
        &problem.targets,
        &problem.probes,
        lambda,
        problem.sims_per_eval,
        seed,
    ) {
        Ok(t) => {
            let loss: f64 = t
                .iter()
                .zip(&problem.expert_stats)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if loss.is_finite() {
                loss
            } else {
                INVALID_LAMBDA_PENALTY
            }
        }
        Err(_) => INVALID_LAMBDA_PENALTY,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ElicitationResult {
    pub lambda_names: Vec<String>,
    pub lambda_star: Vec<f64>,
    pub loss: f64,
    pub loss_name: String,
    /// Best loss after each simplex iteration.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub identifiability: Identifiability,
}

fn to_unconstrained(t: &[Transform], lambda: &[f64]) -> Vec<f64> {
    t.iter().zip(lambda).map(|(t, v)| t.to_unconstrained(*v)).collect()
}

fn to_constrained(t: &[Transform], z: &[f64]) -> Vec<f64> {
    t.iter().zip(z).map(|(t, v)| t.to_constrained(*v)).collect()
}

/// Nelder–Mead in unconstrained λ space with every loss evaluation on the
/// same `seed`.
pub fn elicit_prior(
    problem: &ElicitationProblem,
    lambda0: &[f64],
    cfg: &NelderMeadConfig,
    seed: Seed,
) -> Result<ElicitationResult> {
    let family = problem.family.as_ref();
    if !family.is_valid(lambda0) {
        return Err(Error::invalid(format!("invalid starting hyperparameters {lambda0:?}")));
    }
    let transforms = family.transforms();
    let nm = minimize(
        |z| elicitation_loss(problem, &to_constrained(&transforms, z), seed),
        &to_unconstrained(&transforms, lambda0),
        cfg,
    );
    let lambda_star = to_constrained(&transforms, &nm.x);
    debug_assert!(family.is_valid(&lambda_star));
    Ok(ElicitationResult {
        lambda_names: family.lambda_names().iter().map(|s| s.to_string()).collect(),
        lambda_star,
        loss: nm.fx,
        loss_name: LOSS_NAME.to_string(),
        loss_trace: nm.trace,
        converged: nm.converged,
        iterations: nm.iterations,
        evaluations: nm.evaluations,
        identifiability: problem.identifiability(),
    })
}
