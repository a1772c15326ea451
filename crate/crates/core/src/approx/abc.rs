//! Rejection ABC. Only the prior sampler and the simulator are used; the
//! likelihood is never evaluated.

use crate::data::{Dataset, DrawSource, ParamDraws};
use crate::model::Model;
use crate::prelude::*;
use crate::rng::Seed;
use crate::statistic::Discrepancy;
use crate::{par, Error, Result};

const BATCH: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbcAcceptance {
    /// Accept when distance ≤ ε. `f64::INFINITY` accepts everything.
    Tolerance(f64),
    /// Accept the closest fraction of a pool of `max_proposals` proposals.
    Quantile(f64),
}

#[derive(Debug, Clone)]
pub struct AbcConfig {
    pub distance: Discrepancy,
    pub acceptance: AbcAcceptance,
    pub max_proposals: usize,
}

impl AbcConfig {
    pub fn new(distance: Discrepancy, acceptance: AbcAcceptance, max_proposals: usize) -> Result<Self> {
        match acceptance {
            AbcAcceptance::Tolerance(eps) if eps.is_nan() || eps < 0.0 => {
                return Err(Error::invalid(format!("tolerance must be nonnegative, got {eps}")));
            }
            AbcAcceptance::Quantile(q) if !(q > 0.0 && q <= 1.0) => {
                return Err(Error::invalid(format!(
                    "acceptance quantile must be in (0, 1], got {q}"
                )));
            }
            _ => {}
        }
        if max_proposals == 0 {
            return Err(Error::invalid("max_proposals must be positive"));
        }
        Ok(AbcConfig {
            distance,
            acceptance,
            max_proposals,
        })
    }
}

#[derive(Debug, Clone)]
pub struct AbcOutput {
    pub draws: ParamDraws,
    pub acceptance_rate: f64,
    pub proposals: usize,
    pub accepted: usize,
    /// Tolerance in effect: the configured ε, or the distance cut-off
    /// implied by the acceptance quantile.
    pub epsilon: f64,
}

/// Prior proposals with their distances to the observed data. Proposal `i`
/// always uses stream `seed.child(i)`.
#[derive(Debug, Clone)]
pub struct ProposalPool {
    pub thetas: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
}

struct Observed<'a> {
    model: &'a dyn Model,
    distance: &'a Discrepancy,
    stat: Option<f64>,
    n_per_group: usize,
}

impl<'a> Observed<'a> {
    fn new(model: &'a dyn Model, y_obs: &Dataset, distance: &'a Discrepancy) -> Result<Self> {
        if !model.capabilities().prior {
            return Err(Error::capability(model.name(), "prior sampling"));
        }
        if y_obs.is_empty() {
            return Ok(Observed {
                model,
                distance,
                stat: None,
                n_per_group: 0,
            });
        }
        let stat = distance
            .base()
            .eval(y_obs)
            .ok_or_else(|| Error::UndefinedStatistic(distance.name()))?;
        let groups = model.data_shape().groups.max(1);
        Ok(Observed {
            model,
            distance,
            stat: Some(stat),
            n_per_group: (y_obs.n() / groups).max(1),
        })
    }

    fn propose(&self, seed: Seed) -> Result<(Vec<f64>, f64)> {
        let mut rng = seed.rng();
        let theta = self.model.draw_prior(&mut rng)?;
        let Some(obs) = self.stat else {
            // Nothing observed: every proposal is at distance zero.
            return Ok((theta, 0.0));
        };
        let y = self.model.draw_data(&theta, self.n_per_group, &mut rng)?;
        let d = self.distance.eval_with_observed(obs, &y).unwrap_or(f64::INFINITY);
        Ok((theta, d))
    }
}

impl ProposalPool {
    pub fn simulate(
        model: &dyn Model,
        y_obs: &Dataset,
        distance: &Discrepancy,
        size: usize,
        seed: Seed,
    ) -> Result<Self> {
        let obs = Observed::new(model, y_obs, distance)?;
        let pairs = par::try_map_indexed(size, |i| obs.propose(seed.child(i as u64)))?;
        let (thetas, distances) = pairs.into_iter().unzip();
        Ok(ProposalPool { thetas, distances })
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Fraction of the pool within distance `eps`.
    pub fn acceptance_rate(&self, eps: f64) -> f64 {
        self.distances.iter().filter(|&&d| d <= eps).count() as f64 / self.len() as f64
    }
}

/// Collects `m` accepted draws.
///
/// With a fixed tolerance, proposals are examined in index order until `m`
/// are accepted or `max_proposals` is reached. With an acceptance quantile,
/// one pool of `max_proposals` is simulated, the closest `⌈q·pool⌉`
/// proposals are accepted and the first `m` of those (in index order) are
/// returned.
pub fn abc_rejection(model: &dyn Model, y_obs: &Dataset, cfg: &AbcConfig, m: usize, seed: Seed) -> Result<AbcOutput> {
    let dim = model.param_dim();
    match cfg.acceptance {
        AbcAcceptance::Tolerance(eps) => {
            let obs = Observed::new(model, y_obs, &cfg.distance)?;
            let mut accepted: Vec<f64> = Vec::with_capacity(m * dim);
            let mut count = 0;
            let mut proposals = 0;
            while count < m && proposals < cfg.max_proposals {
                let batch = BATCH.min(cfg.max_proposals - proposals);
                let start = proposals;
                let results = par::try_map_indexed(batch, |i| obs.propose(seed.child((start + i) as u64)))?;
                for (theta, d) in results {
                    proposals += 1;
                    if d <= eps {
                        accepted.extend(theta);
                        count += 1;
                        if count == m {
                            break;
                        }
                    }
                }
            }
            let acceptance_rate = count as f64 / proposals as f64;
            if count < m {
                return Err(Error::Budget {
                    accepted: count,
                    requested: m,
                    proposals,
                    acceptance_rate,
                });
            }
            Ok(AbcOutput {
                draws: ParamDraws::new(dim, accepted, DrawSource::ApproximatePosterior)?,
                acceptance_rate,
                proposals,
                accepted: count,
                epsilon: eps,
            })
        }
        AbcAcceptance::Quantile(q) => {
            let pool = ProposalPool::simulate(model, y_obs, &cfg.distance, cfg.max_proposals, seed)?;
            let keep = ((q * pool.len() as f64).ceil() as usize).clamp(1, pool.len());
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.sort_by(|&a, &b| pool.distances[a].total_cmp(&pool.distances[b]).then(a.cmp(&b)));
            let epsilon = pool.distances[order[keep - 1]];
            let acceptance_rate = keep as f64 / pool.len() as f64;
            if keep < m {
                return Err(Error::Budget {
                    accepted: keep,
                    requested: m,
                    proposals: pool.len(),
                    acceptance_rate,
                });
            }
            let mut chosen = order[..keep].to_vec();
            chosen.sort_unstable();
            let values = chosen[..m]
                .iter()
                .flat_map(|&i| pool.thetas[i].iter().copied())
                .collect();
            Ok(AbcOutput {
                draws: ParamDraws::new(dim, values, DrawSource::ApproximatePosterior)?,
                acceptance_rate,
                proposals: pool.len(),
                accepted: keep,
                epsilon,
            })
        }
    }
}
