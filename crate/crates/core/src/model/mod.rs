//! Generative models: a prior π(θ), an observation model π(y | θ) and, for
//! the conjugate built-ins, closed-form posteriors and evidences that serve
//! as oracles for everything else.

mod beta_binomial;
mod lognormal;
mod normal_normal;
mod poisson_gamma;
mod posterior;
mod transform;

pub use beta_binomial::BetaBinomial;
pub use lognormal::LogNormalTwoGroup;
pub use normal_normal::NormalNormal;
pub use poisson_gamma::PoissonGamma;
pub use posterior::Posterior;
pub use transform::Transform;

use crate::data::{Dataset, DrawSource, ParamDraws};
use crate::prelude::*;
use crate::rng::{Seed, SimRng};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Capabilities {
    /// The model has a proper prior that can be sampled.
    pub prior: bool,
    pub log_prior: bool,
    pub log_likelihood: bool,
    pub analytic_posterior: bool,
    pub analytic_marginal: bool,
}

/// Default shape of a simulated dataset. `n` counts observations per group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DataShape {
    pub n: usize,
    pub obs_dim: usize,
    pub groups: usize,
}

pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    fn param_dim(&self) -> usize;

    fn data_shape(&self) -> DataShape;

    fn capabilities(&self) -> Capabilities;

    /// Hyperparameters as (key, value) pairs, for reports.
    fn hyperparameters(&self) -> Vec<(&'static str, f64)>;

    /// Rejects parameters outside the model's domain.
    fn check_theta(&self, theta: &[f64]) -> Result<()>;

    fn draw_prior(&self, _rng: &mut SimRng) -> Result<Vec<f64>> {
        Err(Error::capability(self.name(), "prior sampling"))
    }

    /// Draws `n` observations per group. Callers have already validated
    /// `theta`.
    fn draw_data(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Result<Dataset>;

    fn log_prior(&self, _theta: &[f64]) -> Result<f64> {
        Err(Error::capability(self.name(), "log prior"))
    }

    /// Σᵢ log π(yᵢ | θ); `-inf` for data with zero density.
    fn log_likelihood(&self, _theta: &[f64], _y: &Dataset) -> Result<f64> {
        Err(Error::capability(self.name(), "log likelihood"))
    }

    fn posterior(&self, _y: &Dataset) -> Result<Posterior> {
        Err(Error::capability(self.name(), "analytic posterior"))
    }

    /// log π(y), the exact evidence.
    fn log_marginal_likelihood(&self, _y: &Dataset) -> Result<f64> {
        Err(Error::capability(self.name(), "analytic marginal likelihood"))
    }

    /// Per-dimension map to an unconstrained space.
    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity; self.param_dim()]
    }
}

/// `s` independent prior draws; draw `i` uses stream `seed.child(i)`.
pub fn sample_prior(model: &dyn Model, seed: Seed, s: usize) -> Result<ParamDraws> {
    if s == 0 {
        return Err(Error::invalid("at least one prior draw is required"));
    }
    if !model.capabilities().prior {
        return Err(Error::capability(model.name(), "prior sampling"));
    }
    let rows = par::try_map_indexed(s, |i| model.draw_prior(&mut seed.child(i as u64).rng()))?;
    ParamDraws::from_rows(&rows, DrawSource::Prior)
}

pub fn simulate_data(model: &dyn Model, theta: &[f64], seed: Seed, n: usize) -> Result<Dataset> {
    model.check_theta(theta)?;
    if n == 0 {
        return Err(Error::invalid("cannot simulate an empty dataset"));
    }
    model.draw_data(theta, n, &mut seed.rng())
}

pub fn log_likelihood(model: &dyn Model, theta: &[f64], y: &Dataset) -> Result<f64> {
    model.check_theta(theta)?;
    model.log_likelihood(theta, y)
}

pub fn analytic_posterior(model: &dyn Model, y: &Dataset) -> Result<Posterior> {
    model.posterior(y)
}

pub(crate) fn check_len(model: &dyn Model, theta: &[f64]) -> Result<()> {
    if theta.len() != model.param_dim() {
        return Err(Error::Domain(format!(
            "{} expects {} parameters, got {}",
            model.name(),
            model.param_dim(),
            theta.len()
        )));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain(format!("non-finite parameter {theta:?}")));
    }
    Ok(())
}

pub(crate) fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn prior_sampling_is_deterministic() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 10).unwrap();
        let a = sample_prior(&m, Seed(5), 1).unwrap();
        let b = sample_prior(&m, Seed(5), 1).unwrap();
        assert_eq!(a, b);
        assert!(sample_prior(&m, Seed(5), 0).is_err());
    }

    #[test]
    fn frequentist_model_has_no_prior() {
        let m = LogNormalTwoGroup::new(2.0, 2.0, 40).unwrap();
        let err = sample_prior(&m, Seed(1), 10).unwrap_err();
        assert!(matches!(err, Error::Capability { .. }));
    }

    #[test]
    fn beta_one_one_prior_mean_is_half() {
        let m = BetaBinomial::new(1.0, 1.0, 10, 1).unwrap();
        let d = sample_prior(&m, Seed(11), 100_000).unwrap().column(0);
        let se = stats::mc_se(&d);
        assert!((stats::mean(&d) - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn normal_prior_variance_is_one() {
        let m = NormalNormal::new(0.0, 1.0, 1.0, 10).unwrap();
        let d = sample_prior(&m, Seed(12), 100_000).unwrap().column(0);
        // Var of the sample variance for a normal: 2σ⁴/(S-1).
        let se = (2.0f64 / 99_999.0).sqrt();
        assert!((stats::variance(&d) - 1.0).abs() < 3.0 * se);
    }

    #[test]
    fn prior_predictive_mean_matches_analytic() {
        // Poisson-Gamma(a=2, b=1): E[y] = a/b = 2.
        let m = PoissonGamma::new(2.0, 1.0, 1).unwrap();
        let s = 100_000;
        let thetas = sample_prior(&m, Seed(3), s).unwrap();
        let ys: Vec<f64> = (0..s)
            .map(|i| {
                simulate_data(&m, thetas.row(i), Seed(4).child(i as u64), 1)
                    .unwrap()
                    .values()[0]
            })
            .collect();
        assert!((stats::mean(&ys) - 2.0).abs() < 3.0 * stats::mc_se(&ys));
    }
}
