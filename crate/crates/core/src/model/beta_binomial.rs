use rand_distr::{Beta, Binomial, Distribution};

use super::{check_len, positive, Capabilities, DataShape, Model, Posterior, Transform};
use crate::data::Dataset;
use crate::prelude::*;
use crate::rng::SimRng;
use crate::special::{ln_beta, ln_choose};
use crate::{Error, Result};

/// θ ~ Beta(a, b); each observation is a count kᵢ | θ ~ Binomial(trials, θ).
#[derive(Debug, Clone, PartialEq)]
pub struct BetaBinomial {
    pub a: f64,
    pub b: f64,
    pub trials: u64,
    /// Number of counts per dataset (usually 1).
    pub n: usize,
}

impl BetaBinomial {
    pub fn new(a: f64, b: f64, trials: u64, n: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        Ok(BetaBinomial {
            a: positive("a", a)?,
            b: positive("b", b)?,
            trials,
            n,
        })
    }

    fn counts(&self, y: &Dataset) -> (f64, f64) {
        let k: f64 = y.values().iter().sum();
        (k, y.n() as f64 * self.trials as f64 - k)
    }

    fn valid_count(&self, k: f64) -> bool {
        k.fract() == 0.0 && (0.0..=self.trials as f64).contains(&k)
    }
}

impl Model for BetaBinomial {
    fn name(&self) -> &str {
        "beta-binomial"
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
            ("a", self.a),
            ("b", self.b),
            ("trials", self.trials as f64),
            ("n", self.n as f64),
        ]
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_len(self, theta)?;
        if !(0.0..=1.0).contains(&theta[0]) {
            return Err(Error::Domain(format!(
                "success probability {} outside [0, 1]",
                theta[0]
            )));
        }
        Ok(())
    }

    fn draw_prior(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        Ok(vec![Beta::new(self.a, self.b).expect("validated").sample(rng)])
    }

    fn draw_data(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Result<Dataset> {
        let d = Binomial::new(self.trials, theta[0]).expect("validated");
        Dataset::from_values((0..n).map(|_| d.sample(rng) as f64).collect())
    }

    fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        let t = theta[0];
        if !(0.0..=1.0).contains(&t) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((self.a - 1.0) * t.ln() + (self.b - 1.0) * (1.0 - t).ln() - ln_beta(self.a, self.b))
    }

    fn log_likelihood(&self, theta: &[f64], y: &Dataset) -> Result<f64> {
        let t = theta[0];
        let n = self.trials as f64;
        let mut total = 0.0;
        for &k in y.values() {
            if !self.valid_count(k) {
                return Ok(f64::NEG_INFINITY);
            }
            // 0 · log 0 is taken as 0 at the boundary.
            let success = if k > 0.0 { k * t.ln() } else { 0.0 };
            let failure = if n - k > 0.0 { (n - k) * (1.0 - t).ln() } else { 0.0 };
            total += ln_choose(n, k) + success + failure;
        }
        Ok(total)
    }

    fn posterior(&self, y: &Dataset) -> Result<Posterior> {
        let (k, f) = self.counts(y);
        Ok(Posterior::Beta {
            alpha: self.a + k,
            beta: self.b + f,
        })
    }

    fn log_marginal_likelihood(&self, y: &Dataset) -> Result<f64> {
        if y.values().iter().any(|&k| !self.valid_count(k)) {
            return Ok(f64::NEG_INFINITY);
        }
        let n = self.trials as f64;
        let choose: f64 = y.values().iter().map(|&k| ln_choose(n, k)).sum();
        let (k, f) = self.counts(y);
        Ok(choose + ln_beta(self.a + k, self.b + f) - ln_beta(self.a, self.b))
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Logit]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_likelihood, simulate_data};
    use crate::rng::Seed;

    #[test]
    fn certain_success() {
        let m = BetaBinomial::new(1.0, 1.0, 20, 1).unwrap();
        let y = simulate_data(&m, &[1.0], Seed(3), 1).unwrap();
        assert_eq!(y.values(), &[20.0]);
        assert!(simulate_data(&m, &[1.5], Seed(3), 1).is_err());
    }

    #[test]
    fn one_of_two() {
        let m = BetaBinomial::new(1.0, 1.0, 2, 1).unwrap();
        let y = Dataset::from_values(vec![1.0]).unwrap();
        let ll = log_likelihood(&m, &[0.5], &y).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-14);
        let bad = Dataset::from_values(vec![3.0]).unwrap();
        assert_eq!(log_likelihood(&m, &[0.5], &bad).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn conjugate_update_and_evidence() {
        let m = BetaBinomial::new(1.0, 1.0, 10, 1).unwrap();
        let y = Dataset::from_values(vec![3.0]).unwrap();
        assert_eq!(m.posterior(&y).unwrap(), Posterior::Beta { alpha: 4.0, beta: 8.0 });
        // Uniform prior: every count is equally likely.
        assert!((m.log_marginal_likelihood(&y).unwrap() - (1.0f64 / 11.0).ln()).abs() < 1e-12);
    }
}
