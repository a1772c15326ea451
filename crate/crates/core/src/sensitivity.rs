//! Sensitivity analysis: power-scaling importance weights on existing
//! posterior draws, and sweeps of a pipeline over a hyperparameter grid.
//!
//! Sweeps cover model and approximator hyperparameters. Upstream choices
//! such as data preprocessing are outside what the library can enumerate.

use crate::data::{Dataset, ParamDraws};
use crate::model::Model;
use crate::prelude::*;
use crate::rng::Seed;
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDraws {
    pub draws: ParamDraws,
    /// Normalized: `Σ exp(log_weights) = 1`.
    pub log_weights: Vec<f64>,
    pub normalized: bool,
    pub ess: f64,
}

impl WeightedDraws {
    /// Normalizes raw log-weights and computes `(Σw)²/Σw²` on weights
    /// shifted by their maximum, so equal log-weights give ESS = S exactly.
    pub fn new(draws: ParamDraws, raw_log_weights: Vec<f64>) -> Result<Self> {
        if raw_log_weights.len() != draws.len() || draws.is_empty() {
            return Err(Error::invalid("one log-weight per draw is required"));
        }
        let max = raw_log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::invalid("log-weights must have a finite maximum"));
        }
        let w: Vec<f64> = raw_log_weights.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = w.iter().sum();
        let sum_sq: f64 = w.iter().map(|x| x * x).sum();
        let log_sum = sum.ln();
        Ok(WeightedDraws {
            log_weights: raw_log_weights.iter().map(|l| l - max - log_sum).collect(),
            draws,
            normalized: true,
            ess: sum * sum / sum_sq,
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn mean(&self, component: usize) -> f64 {
        self.draws
            .column(component)
            .iter()
            .zip(self.weights())
            .map(|(x, w)| x * w)
            .sum()
    }

    /// Weighted quantile: the smallest draw whose cumulative weight reaches
    /// `p`.
    pub fn quantile(&self, component: usize, p: f64) -> f64 {
        let mut pairs: Vec<(f64, f64)> = self.draws.column(component).into_iter().zip(self.weights()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for &(x, w) in &pairs {
            acc += w;
            if acc >= p {
                return x;
            }
        }
        pairs.last().map_or(f64::NAN, |&(x, _)| x)
    }
}

/// Log-weights `(α_prior − 1)·log π(θ) + (α_lik − 1)·log π(y | θ)` that
/// turn draws from π(θ | y) into draws from the posterior under π(θ)^α_prior
/// and π(y | θ)^α_lik.
pub fn power_scale_weights(draws: &ParamDraws, alpha_prior: f64, alpha_lik: f64) -> Result<WeightedDraws> {
    if !(alpha_prior > 0.0 && alpha_lik > 0.0) {
        return Err(Error::invalid(format!(
            "power-scaling exponents must be positive, got ({alpha_prior}, {alpha_lik})"
        )));
    }
    let (Some(lp), Some(ll)) = (&draws.log_prior, &draws.log_lik) else {
        return Err(Error::capability("draws", "stored log prior and log likelihood"));
    };
    let raw = lp
        .iter()
        .zip(ll)
        .map(|(p, l)| {
            // A zero exponent offset contributes nothing even when the density is zero.
            let term = |a: f64, v: f64| if a == 1.0 { 0.0 } else { (a - 1.0) * v };
            term(alpha_prior, *p) + term(alpha_lik, *l)
        })
        .collect();
    WeightedDraws::new(draws.clone(), raw)
}

/// Records log π(θ) and log π(y | θ) on every draw.
pub fn attach_densities(model: &dyn Model, draws: &ParamDraws, y: &Dataset) -> Result<ParamDraws> {
    let lp = draws.rows().map(|r| model.log_prior(r)).collect::<Result<Vec<_>>>()?;
    let ll = draws
        .rows()
        .map(|r| model.log_likelihood(r, y))
        .collect::<Result<Vec<_>>>()?;
    let mut out = draws.clone();
    out.log_prior = Some(lp);
    out.log_lik = Some(ll);
    Ok(out)
}

/// Named hyperparameter values of one grid cell.
pub type GridPoint = Vec<(String, f64)>;

/// Cartesian product of the axes, first axis varying slowest.
pub fn grid_product(axes: &[(String, Vec<f64>)]) -> Vec<GridPoint> {
    axes.iter().fold(vec![Vec::new()], |acc, (name, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((name.clone(), v));
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub index: usize,
    pub seed: crate::Seed,
    pub config: GridPoint,
    pub outputs: Vec<(String, f64)>,
    pub error: Option<String>,
}

/// Runs `pipeline` once per grid point with seed `seed.child(i)`. Failing
/// cells are kept with their error and empty outputs.
pub fn sensitivity_sweep<F>(grid: &[GridPoint], seed: Seed, pipeline: F) -> Result<Vec<SweepRow>>
where
    F: Fn(&GridPoint, Seed) -> Result<Vec<(String, f64)>> + Send + Sync,
{
    if grid.is_empty() {
        return Err(Error::invalid("empty sweep grid"));
    }
    Ok(par::map_indexed(grid.len(), |i| {
        let cell_seed = seed.child(i as u64);
        let (outputs, error) = match pipeline(&grid[i], cell_seed) {
            Ok(o) => (o, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        SweepRow {
            index: i,
            seed: cell_seed,
            config: grid[i].clone(),
            outputs,
            error,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DrawSource;

    fn draws_with(lp: Vec<f64>, ll: Vec<f64>) -> ParamDraws {
        let mut d = ParamDraws::new(1, (0..lp.len()).map(|i| i as f64).collect(), DrawSource::Posterior).unwrap();
        d.log_prior = Some(lp);
        d.log_lik = Some(ll);
        d
    }

    #[test]
    fn identity_scaling_keeps_all_draws() {
        let d = draws_with(vec![-1.0, -3.0, -2.5, -7.0], vec![-10.0, -4.0, -8.0, -1.0]);
        let w = power_scale_weights(&d, 1.0, 1.0).unwrap();
        assert_eq!(w.ess, 4.0);
        assert!(w.weights().iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn weights_normalize() {
        let d = draws_with(vec![-1.0, -3.0, -2.5], vec![-10.0, -4.0, -8.0]);
        let w = power_scale_weights(&d, 2.0, 0.5).unwrap();
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.ess > 0.0 && w.ess <= 3.0);
    }

    #[test]
    fn needs_densities() {
        let d = ParamDraws::new(1, vec![1.0, 2.0], DrawSource::Posterior).unwrap();
        assert!(power_scale_weights(&d, 2.0, 1.0).is_err());
        let d = draws_with(vec![0.0, 0.0], vec![0.0, 0.0]);
        assert!(power_scale_weights(&d, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_and_sweep_shape() {
        let grid = grid_product(&[("a".into(), vec![1.0, 2.0]), ("b".into(), vec![0.0, 1.0, 2.0])]);
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[1], vec![("a".to_string(), 1.0), ("b".to_string(), 1.0)]);
        let rows = sensitivity_sweep(&grid, Seed(1), |p, _| {
            if p[1].1 == 2.0 {
                Err(Error::invalid("boom"))
            } else {
                Ok(vec![("sum".into(), p[0].1 + p[1].1)])
            }
        })
        .unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().filter(|r| r.error.is_some()).count(), 2);
        assert!(sensitivity_sweep(&[], Seed(1), |_, _| Ok(vec![])).is_err());
    }
}
