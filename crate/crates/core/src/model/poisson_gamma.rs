use rand_distr::{Distribution, Gamma, Poisson};

use super::{check_len, positive, Capabilities, DataShape, Model, Posterior, Transform};
use crate::data::Dataset;
use crate::prelude::*;
use crate::rng::SimRng;
use crate::special::ln_gamma;
use crate::{Error, Result};

/// θ ~ Gamma(shape a, rate b), yᵢ | θ ~ Poisson(θ).
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonGamma {
    pub shape: f64,
    pub rate: f64,
    pub n: usize,
}

impl PoissonGamma {
    pub fn new(shape: f64, rate: f64, n: usize) -> Result<Self> {
        Ok(PoissonGamma {
            shape: positive("shape", shape)?,
            rate: positive("rate", rate)?,
            n,
        })
    }
}

fn valid_count(y: f64) -> bool {
    y >= 0.0 && y.fract() == 0.0
}

impl Model for PoissonGamma {
    fn name(&self) -> &str {
        "poisson-gamma"
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
        vec![("shape", self.shape), ("rate", self.rate), ("n", self.n as f64)]
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_len(self, theta)?;
        if theta[0] <= 0.0 {
            return Err(Error::Domain(format!("Poisson rate {} must be positive", theta[0])));
        }
        Ok(())
    }

    fn draw_prior(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        let d = Gamma::new(self.shape, 1.0 / self.rate).expect("validated");
        // The gamma sampler can underflow to 0 for tiny shapes.
        Ok(vec![d.sample(rng).max(f64::MIN_POSITIVE)])
    }

    fn draw_data(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Result<Dataset> {
        let d = Poisson::new(theta[0]).map_err(|e| Error::Domain(format!("{e}")))?;
        Dataset::from_values((0..n).map(|_| d.sample(rng)).collect())
    }

    fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        let t = theta[0];
        if t <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * t.ln() - self.rate * t)
    }

    fn log_likelihood(&self, theta: &[f64], y: &Dataset) -> Result<f64> {
        let t = theta[0];
        let mut total = 0.0;
        for &k in y.values() {
            if !valid_count(k) {
                return Ok(f64::NEG_INFINITY);
            }
            let kt = if k > 0.0 { k * t.ln() } else { 0.0 };
            total += kt - t - ln_gamma(k + 1.0);
        }
        Ok(total)
    }

    fn posterior(&self, y: &Dataset) -> Result<Posterior> {
        let sum: f64 = y.values().iter().sum();
        Ok(Posterior::Gamma {
            shape: self.shape + sum,
            rate: self.rate + y.n() as f64,
        })
    }

    fn log_marginal_likelihood(&self, y: &Dataset) -> Result<f64> {
        if y.values().iter().any(|&k| !valid_count(k)) {
            return Ok(f64::NEG_INFINITY);
        }
        let sum: f64 = y.values().iter().sum();
        let n = y.n() as f64;
        let fact: f64 = y.values().iter().map(|&k| ln_gamma(k + 1.0)).sum();
        Ok(
            self.shape * self.rate.ln() - ln_gamma(self.shape) + ln_gamma(self.shape + sum)
                - (self.shape + sum) * (self.rate + n).ln()
                - fact,
        )
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_likelihood;

    #[test]
    fn two_zero_counts() {
        let m = PoissonGamma::new(2.0, 1.0, 2).unwrap();
        let y = Dataset::from_values(vec![0.0, 0.0]).unwrap();
        assert!((log_likelihood(&m, &[1.0], &y).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn conjugate_update() {
        let m = PoissonGamma::new(2.0, 1.0, 2).unwrap();
        let y = Dataset::from_values(vec![3.0, 1.0]).unwrap();
        assert_eq!(m.posterior(&y).unwrap(), Posterior::Gamma { shape: 6.0, rate: 3.0 });
    }

    #[test]
    fn evidence_by_candidate_formula() {
        let m = PoissonGamma::new(2.0, 1.0, 2).unwrap();
        let y = Dataset::from_values(vec![3.0, 1.0]).unwrap();
        let post = m.posterior(&y).unwrap();
        let t = 1.7;
        let direct = m.log_likelihood(&[t], &y).unwrap() + m.log_prior(&[t]).unwrap() - post.ln_pdf(t);
        assert!((m.log_marginal_likelihood(&y).unwrap() - direct).abs() < 1e-12);
    }
}
