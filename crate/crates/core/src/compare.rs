//! Model comparison by naive prior Monte Carlo evidence estimates.

use alloc::sync::Arc;

use crate::data::Dataset;
use crate::model::Model;
use crate::prelude::*;
use crate::rng::Seed;
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evidence {
    pub model: String,
    /// log π(y_obs); `-inf` when every likelihood evaluation was zero.
    pub log_evidence: f64,
    /// Delta-method standard error of `log_evidence`.
    pub mc_se: Option<f64>,
    pub s: usize,
    pub diagnostic: Option<String>,
}

/// `log[(1/S)·Σ π(y_obs | θ⁽ˢ⁾)]` with θ⁽ˢ⁾ ~ π(θ); draw `s` uses
/// `seed.child(s)`. The sum is formed after shifting by the largest
/// log-likelihood, and the standard error is `sd(w)/(√S·mean(w))` for the
/// shifted likelihoods w.
pub fn marginal_likelihood_mc(model: &dyn Model, y_obs: &Dataset, s: usize, seed: Seed) -> Result<Evidence> {
    if s < 2 {
        return Err(Error::invalid("evidence estimation needs at least two prior draws"));
    }
    let caps = model.capabilities();
    if !caps.log_likelihood {
        return Err(Error::capability(model.name(), "log likelihood"));
    }
    if !caps.prior {
        return Err(Error::capability(model.name(), "prior sampling"));
    }
    let ll = par::try_map_indexed(s, |i| {
        let theta = model.draw_prior(&mut seed.child(i as u64).rng())?;
        model.log_likelihood(&theta, y_obs).map_err(|e| e.at(i))
    })?;
    let max = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(Evidence {
            model: model.name().to_string(),
            log_evidence: f64::NEG_INFINITY,
            mc_se: None,
            s,
            diagnostic: Some(format!("all {s} likelihood evaluations were zero")),
        });
    }
    let w: Vec<f64> = ll.iter().map(|l| (l - max).exp()).collect();
    let mean = crate::stats::mean(&w);
    let se = crate::stats::sd(&w) / ((s as f64).sqrt() * mean);
    Ok(Evidence {
        model: model.name().to_string(),
        log_evidence: max + mean.ln(),
        mc_se: Some(se),
        s,
        diagnostic: None,
    })
}

#[derive(Clone)]
pub struct ModelSet {
    models: Vec<Arc<dyn Model>>,
    prior_probs: Vec<f64>,
}

impl ModelSet {
    pub fn new(models: Vec<Arc<dyn Model>>, prior_probs: Vec<f64>) -> Result<Self> {
        if models.is_empty() || models.len() != prior_probs.len() {
            return Err(Error::invalid(format!(
                "{} models with {} prior probabilities",
                models.len(),
                prior_probs.len()
            )));
        }
        if prior_probs.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::invalid("prior model probabilities must be nonnegative"));
        }
        let total: f64 = prior_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("prior model probabilities sum to {total}")));
        }
        Ok(ModelSet { models, prior_probs })
    }

    /// Equal prior probabilities.
    pub fn uniform(models: Vec<Arc<dyn Model>>) -> Result<Self> {
        let l = models.len().max(1) as f64;
        let probs = vec![1.0 / l; models.len()];
        Self::new(models, probs)
    }

    pub fn models(&self) -> &[Arc<dyn Model>] {
        &self.models
    }

    pub fn prior_probs(&self) -> &[f64] {
        &self.prior_probs
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelComparison {
    pub evidence: Vec<Evidence>,
    pub prior_probs: Vec<f64>,
    pub posterior_probs: Vec<f64>,
    /// `log_bayes_factors[i][j] = log π(y | M_i) − log π(y | M_j)`.
    pub log_bayes_factors: Vec<Vec<Option<f64>>>,
}

impl ModelComparison {
    pub fn bayes_factor(&self, i: usize, j: usize) -> Option<f64> {
        self.log_bayes_factors[i][j].map(f64::exp)
    }
}

/// Posterior model probabilities ∝ prior · evidence. Model `l` uses
/// `seed.child(l)`.
pub fn posterior_model_probs(set: &ModelSet, y_obs: &Dataset, s: usize, seed: Seed) -> Result<ModelComparison> {
    let evidence = set
        .models
        .iter()
        .enumerate()
        .map(|(l, m)| marginal_likelihood_mc(m.as_ref(), y_obs, s, seed.child(l as u64)))
        .collect::<Result<Vec<_>>>()?;
    let log_w: Vec<f64> = evidence
        .iter()
        .zip(&set.prior_probs)
        .map(|(e, &p)| {
            if p > 0.0 {
                p.ln() + e.log_evidence
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidence);
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let log_bayes_factors = evidence
        .iter()
        .map(|a| {
            evidence
                .iter()
                .map(|b| {
                    let d = a.log_evidence - b.log_evidence;
                    (!d.is_nan()).then_some(d)
                })
                .collect()
        })
        .collect();
    Ok(ModelComparison {
        posterior_probs: w.iter().map(|x| x / total).collect(),
        prior_probs: set.prior_probs.clone(),
        log_bayes_factors,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BetaBinomial, LogNormalTwoGroup};

    #[test]
    fn uniform_prior_gives_uniform_marginal() {
        let m = BetaBinomial::new(1.0, 1.0, 10, 1).unwrap();
        let y = Dataset::from_values(vec![7.0]).unwrap();
        let e = marginal_likelihood_mc(&m, &y, 100_000, Seed(1)).unwrap();
        assert!((e.log_evidence - (1.0f64 / 11.0).ln()).abs() < 3.0 * e.mc_se.unwrap());
    }

    #[test]
    fn impossible_data_has_zero_evidence() {
        let m = BetaBinomial::new(1.0, 1.0, 10, 1).unwrap();
        let y = Dataset::from_values(vec![11.0]).unwrap();
        let e = marginal_likelihood_mc(&m, &y, 100, Seed(1)).unwrap();
        assert_eq!(e.log_evidence, f64::NEG_INFINITY);
        assert!(e.diagnostic.is_some());
        let set = ModelSet::uniform(vec![Arc::new(m)]).unwrap();
        assert_eq!(posterior_model_probs(&set, &y, 100, Seed(2)), Err(Error::ZeroEvidence));
    }

    #[test]
    fn zero_prior_mass_stays_zero() {
        let a: Arc<dyn Model> = Arc::new(BetaBinomial::new(1.0, 1.0, 10, 1).unwrap());
        let b: Arc<dyn Model> = Arc::new(BetaBinomial::new(2.0, 2.0, 10, 1).unwrap());
        let set = ModelSet::new(vec![a, b], vec![1.0, 0.0]).unwrap();
        let y = Dataset::from_values(vec![4.0]).unwrap();
        let r = posterior_model_probs(&set, &y, 1000, Seed(3)).unwrap();
        assert_eq!(r.posterior_probs, vec![1.0, 0.0]);
        assert_eq!(r.bayes_factor(0, 0), Some(1.0));
    }

    #[test]
    fn validation() {
        let a: Arc<dyn Model> = Arc::new(BetaBinomial::new(1.0, 1.0, 10, 1).unwrap());
        assert!(ModelSet::new(vec![a.clone()], vec![0.5]).is_err());
        assert!(ModelSet::new(vec![a.clone(), a], vec![1.5, -0.5]).is_err());
        let ln = LogNormalTwoGroup::new(0.0, 1.0, 3).unwrap();
        let y = Dataset::from_values(vec![1.0]).unwrap();
        assert!(marginal_likelihood_mc(&ln, &y, 10, Seed(0)).is_err());
    }
}
