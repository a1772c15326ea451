use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};

use super::Transform;
#[cfg(not(feature = "std"))]
use crate::prelude::Float;
use crate::special::{
    beta_inc, bisect_quantile, digamma, gamma_p, ln_beta, ln_gamma, normal_cdf, normal_ln_pdf, normal_quantile,
    trigamma,
};

/// Closed-form univariate posterior of a conjugate model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Posterior {
    Normal {
        mean: f64,
        sd: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Shape / rate parameterization.
    Gamma {
        shape: f64,
        rate: f64,
    },
}

impl Posterior {
    pub fn mean(&self) -> f64 {
        match *self {
            Posterior::Normal { mean, .. } => mean,
            Posterior::Beta { alpha, beta } => alpha / (alpha + beta),
            Posterior::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Posterior::Normal { sd, .. } => sd * sd,
            Posterior::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
            Posterior::Gamma { shape, rate } => shape / (rate * rate),
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Posterior::Normal { mean, sd } => Normal::new(mean, sd).expect("valid normal").sample(rng),
            Posterior::Beta { alpha, beta } => Beta::new(alpha, beta).expect("valid beta").sample(rng),
            Posterior::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Posterior::Normal { mean, sd } => normal_ln_pdf(x, mean, sd),
            Posterior::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_beta(alpha, beta)
            }
            Posterior::Gamma { shape, rate } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Posterior::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            Posterior::Beta { alpha, beta } => beta_inc(alpha, beta, x),
            Posterior::Gamma { shape, rate } => gamma_p(shape, rate * x),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Posterior::Normal { mean, sd } => mean + sd * normal_quantile(p),
            Posterior::Beta { .. } => bisect_quantile(|x| self.cdf(x), p, 0.0, 1.0),
            Posterior::Gamma { .. } => {
                let hi = self.mean() + 50.0 * self.sd();
                bisect_quantile(|x| self.cdf(x), p, 0.0, hi)
            }
        }
    }

    /// Mean and standard deviation of the distribution pushed through the
    /// given transform (logit-Beta and log-Gamma have closed forms).
    pub fn unconstrained_moments(&self, transform: Transform) -> (f64, f64) {
        match (*self, transform) {
            (Posterior::Beta { alpha, beta }, Transform::Logit) => (
                digamma(alpha) - digamma(beta),
                (trigamma(alpha) + trigamma(beta)).sqrt(),
            ),
            (Posterior::Gamma { shape, rate }, Transform::Log) => (digamma(shape) - rate.ln(), trigamma(shape).sqrt()),
            _ => (self.mean(), self.sd()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use crate::stats;

    #[test]
    fn logit_beta_moments_match_simulation() {
        let p = Posterior::Beta { alpha: 4.0, beta: 8.0 };
        let mut rng = Seed(9).rng();
        let z: Vec<f64> = (0..200_000)
            .map(|_| Transform::Logit.to_unconstrained(p.sample(&mut rng)))
            .collect();
        let (m, s) = p.unconstrained_moments(Transform::Logit);
        assert!((stats::mean(&z) - m).abs() < 4.0 * stats::mc_se(&z));
        assert!((stats::sd(&z) - s).abs() < 0.01);
    }

    #[test]
    fn quantiles_invert_cdf() {
        for p in [
            Posterior::Normal { mean: 0.5, sd: 0.7 },
            Posterior::Beta { alpha: 4.0, beta: 8.0 },
            Posterior::Gamma { shape: 6.0, rate: 3.0 },
        ] {
            for q in [0.1, 0.5, 0.9] {
                assert!((p.cdf(p.quantile(q)) - q).abs() < 1e-10);
            }
        }
    }
}
