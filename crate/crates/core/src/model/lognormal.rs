use rand_distr::{Distribution, LogNormal};

use super::{check_len, positive, Capabilities, DataShape, Model, Transform};
use crate::data::Dataset;
use crate::prelude::*;
use crate::rng::SimRng;
use crate::{Error, Result};
use core::f64::consts::PI;

/// Two groups of log-normal observations, θ = (μ₀, μ₁, σ) on the log scale.
///
/// A frequentist model: there is no prior, only an observation model. The
/// constructor's (μ, σ) pair defines the null parameter (μ, μ, σ).
#[derive(Debug, Clone, PartialEq)]
pub struct LogNormalTwoGroup {
    pub mu: f64,
    pub sigma: f64,
    pub n_per_group: usize,
}

impl LogNormalTwoGroup {
    pub fn new(mu: f64, sigma: f64, n_per_group: usize) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu must be finite"));
        }
        Ok(LogNormalTwoGroup {
            mu,
            sigma: positive("sigma", sigma)?,
            n_per_group,
        })
    }

    /// Equal location and scale in both groups.
    pub fn null_theta(&self) -> Vec<f64> {
        vec![self.mu, self.mu, self.sigma]
    }

    /// Difference of the group means on the data scale, group 1 minus group 0.
    pub fn mean_difference(theta: &[f64]) -> f64 {
        let half_var = 0.5 * theta[2] * theta[2];
        (theta[1] + half_var).exp() - (theta[0] + half_var).exp()
    }
}

impl Model for LogNormalTwoGroup {
    fn name(&self) -> &str {
        "lognormal-two-group"
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn data_shape(&self) -> DataShape {
        DataShape {
            n: self.n_per_group,
            obs_dim: 1,
            groups: 2,
        }
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            log_likelihood: true,
            ..Capabilities::default()
        }
    }

    fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        vec![("mu", self.mu), ("sigma", self.sigma), ("n", self.n_per_group as f64)]
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_len(self, theta)?;
        if theta[2] <= 0.0 {
            return Err(Error::Domain(format!("log-scale sd {} must be positive", theta[2])));
        }
        Ok(())
    }

    fn draw_data(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Result<Dataset> {
        let g0 = LogNormal::new(theta[0], theta[2]).expect("validated");
        let g1 = LogNormal::new(theta[1], theta[2]).expect("validated");
        let mut values = Vec::with_capacity(2 * n);
        values.extend((0..n).map(|_| g0.sample(rng)));
        values.extend((0..n).map(|_| g1.sample(rng)));
        let mut groups = vec![0u32; n];
        groups.extend(core::iter::repeat_n(1u32, n));
        Dataset::new(1, values, Some(groups))
    }

    fn log_likelihood(&self, theta: &[f64], y: &Dataset) -> Result<f64> {
        let groups = y
            .groups()
            .ok_or_else(|| Error::invalid("two-group data needs group labels"))?;
        let sigma = theta[2];
        let mut total = 0.0;
        for (&v, &g) in y.values().iter().zip(groups) {
            if v <= 0.0 || g > 1 {
                return Ok(f64::NEG_INFINITY);
            }
            let z = (v.ln() - theta[g as usize]) / sigma;
            total += -v.ln() - sigma.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * z * z;
        }
        Ok(total)
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity, Transform::Identity, Transform::Log]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate_data;
    use crate::rng::Seed;

    #[test]
    fn forty_positive_values_per_group() {
        let m = LogNormalTwoGroup::new(2.0, 2.0, 40).unwrap();
        let y = simulate_data(&m, &m.null_theta(), Seed(1), 40).unwrap();
        assert_eq!(y.n(), 80);
        assert_eq!(y.group_values(0).len(), 40);
        assert_eq!(y.group_values(1).len(), 40);
        assert!(y.values().iter().all(|&v| v > 0.0));
        assert!(m.log_likelihood(&m.null_theta(), &y).unwrap().is_finite());
    }

    #[test]
    fn null_has_zero_mean_difference() {
        let m = LogNormalTwoGroup::new(2.0, 2.0, 40).unwrap();
        assert_eq!(LogNormalTwoGroup::mean_difference(&m.null_theta()), 0.0);
    }
}
