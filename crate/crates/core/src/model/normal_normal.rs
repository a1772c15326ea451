use rand_distr::{Distribution, Normal};

use super::{check_len, positive, Capabilities, DataShape, Model, Posterior};
use crate::data::Dataset;
use crate::prelude::*;
use crate::rng::SimRng;
use crate::special::normal_ln_pdf;
use crate::{Error, Result};

/// θ ~ Normal(μ₀, τ₀²), yᵢ | θ ~ Normal(θ, σ²) with σ known.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalNormal {
    pub mu0: f64,
    pub tau0: f64,
    pub sigma: f64,
    pub n: usize,
}

impl NormalNormal {
    pub fn new(mu0: f64, tau0: f64, sigma: f64, n: usize) -> Result<Self> {
        if !mu0.is_finite() {
            return Err(Error::invalid("mu0 must be finite"));
        }
        Ok(NormalNormal {
            mu0,
            tau0: positive("tau0", tau0)?,
            sigma: positive("sigma", sigma)?,
            n,
        })
    }
}

impl Model for NormalNormal {
    fn name(&self) -> &str {
        "normal-normal"
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn data_shape(&self) -> DataShape {
        DataShape {
            n: self.n,
            obs_dim: 1,
            groups: 1,
        }
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            prior: true,
            log_prior: true,
            log_likelihood: true,
            analytic_posterior: true,
            analytic_marginal: true,
        }
    }

    fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mu0", self.mu0),
            ("tau0", self.tau0),
            ("sigma", self.sigma),
            ("n", self.n as f64),
        ]
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_len(self, theta)
    }

    fn draw_prior(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        let d = Normal::new(self.mu0, self.tau0).expect("validated");
        Ok(vec![d.sample(rng)])
    }

    fn draw_data(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Result<Dataset> {
        let d = Normal::new(theta[0], self.sigma).expect("validated");
        Dataset::from_values((0..n).map(|_| d.sample(rng)).collect())
    }

    fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        Ok(normal_ln_pdf(theta[0], self.mu0, self.tau0))
    }

    fn log_likelihood(&self, theta: &[f64], y: &Dataset) -> Result<f64> {
        Ok(y.values().iter().map(|&v| normal_ln_pdf(v, theta[0], self.sigma)).sum())
    }

    fn posterior(&self, y: &Dataset) -> Result<Posterior> {
        let n = y.n() as f64;
        let sum: f64 = y.values().iter().sum();
        let prec = 1.0 / (self.tau0 * self.tau0) + n / (self.sigma * self.sigma);
        let mean = (self.mu0 / (self.tau0 * self.tau0) + sum / (self.sigma * self.sigma)) / prec;
        Ok(Posterior::Normal {
            mean,
            sd: prec.sqrt().recip(),
        })
    }

    fn log_marginal_likelihood(&self, y: &Dataset) -> Result<f64> {
        // π(y) = π(y|θ) π(θ) / π(θ|y), evaluated at the posterior mean.
        let post = self.posterior(y)?;
        let at = [post.mean()];
        Ok(self.log_likelihood(&at, y)? + self.log_prior(&at)? - post.ln_pdf(at[0]))
    }
}
