use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, DrawSource, ParamDraws};
use crate::model::{Model, Transform};
use crate::prelude::*;
use crate::rng::{Seed, SimRng};
use crate::{par, Error, Result};

/// Random-walk Metropolis settings when used as an [`Approximator`](super::Approximator).
#[derive(Debug, Clone, PartialEq)]
pub struct RwmConfig {
    pub chains: usize,
    pub warmup: usize,
    /// Keep every `thin`-th post-warmup state.
    pub thin: usize,
    /// Proposal sd per unconstrained coordinate.
    pub step_sd: f64,
}

impl Default for RwmConfig {
    fn default() -> Self {
        RwmConfig {
            chains: 4,
            warmup: 500,
            thin: 2,
            step_sd: 1.0,
        }
    }
}

impl RwmConfig {
    /// Runs enough iterations to collect `m` pooled draws after thinning.
    pub fn run(&self, model: &dyn Model, y: &Dataset, m: usize, seed: Seed) -> Result<RwmOutput> {
        let chains = self.chains.max(1);
        let thin = self.thin.max(1);
        let per_chain = m.div_ceil(chains);
        let mut out = run_chains(model, y, chains, self.warmup, per_chain, thin, self.step_sd, seed)?;
        out.draws.truncate(m);
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct RwmOutput {
    /// Post-warmup draws of all chains, chain after chain, with per-draw log
    /// prior and log likelihood attached.
    pub draws: ParamDraws,
    pub acceptance_rate: f64,
    pub chain_acceptance: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Pooled post-warmup draws of `chains` independent random-walk Metropolis
/// chains of `iterations` steps each (warmup included).
pub fn rwm_sample(
    model: &dyn Model,
    y: &Dataset,
    chains: usize,
    iterations: usize,
    warmup: usize,
    step_sd: f64,
    seed: Seed,
) -> Result<RwmOutput> {
    if iterations <= warmup {
        return Err(Error::invalid("iterations must exceed warmup"));
    }
    run_chains(model, y, chains.max(1), warmup, iterations - warmup, 1, step_sd, seed)
}

struct Target<'a> {
    model: &'a dyn Model,
    y: &'a Dataset,
    transforms: Vec<Transform>,
}

struct State {
    z: Vec<f64>,
    theta: Vec<f64>,
    log_prior: f64,
    log_lik: f64,
    log_target: f64,
}

impl Target<'_> {
    fn evaluate(&self, z: Vec<f64>) -> Result<State> {
        let theta: Vec<f64> = z
            .iter()
            .zip(&self.transforms)
            .map(|(&v, t)| t.to_constrained(v))
            .collect();
        let jac: f64 = z.iter().zip(&self.transforms).map(|(&v, t)| t.log_jacobian(v)).sum();
        if self.model.check_theta(&theta).is_err() {
            return Ok(State {
                z,
                theta,
                log_prior: f64::NEG_INFINITY,
                log_lik: f64::NEG_INFINITY,
                log_target: f64::NEG_INFINITY,
            });
        }
        let log_prior = self.model.log_prior(&theta)?;
        let log_lik = if log_prior.is_finite() {
            self.model.log_likelihood(&theta, self.y)?
        } else {
            f64::NEG_INFINITY
        };
        let log_target = log_prior + log_lik + jac;
        Ok(State {
            z,
            theta,
            log_prior,
            log_lik,
            log_target: if log_target.is_nan() {
                f64::NEG_INFINITY
            } else {
                log_target
            },
        })
    }
}

struct ChainOutput {
    thetas: Vec<f64>,
    log_prior: Vec<f64>,
    log_lik: Vec<f64>,
    accepted: usize,
    steps: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_chains(
    model: &dyn Model,
    y: &Dataset,
    chains: usize,
    warmup: usize,
    keep: usize,
    thin: usize,
    step_sd: f64,
    seed: Seed,
) -> Result<RwmOutput> {
    if !(step_sd > 0.0 && step_sd.is_finite()) {
        return Err(Error::invalid(format!("step_sd must be positive, got {step_sd}")));
    }
    let caps = model.capabilities();
    if !(caps.log_prior && caps.log_likelihood && caps.prior) {
        return Err(Error::capability(model.name(), "log prior and log likelihood"));
    }
    let target = Target {
        model,
        y,
        transforms: model.transforms(),
    };
    let results = par::try_map_indexed(chains, |c| {
        run_chain(&target, warmup, keep, thin, step_sd, &mut seed.child(c as u64).rng()).map_err(|e| e.at(c))
    })?;

    let dim = model.param_dim();
    let mut values = Vec::with_capacity(chains * keep * dim);
    let mut log_prior = Vec::with_capacity(chains * keep);
    let mut log_lik = Vec::with_capacity(chains * keep);
    let mut chain_acceptance = Vec::with_capacity(chains);
    let (mut accepted, mut steps) = (0, 0);
    for r in results {
        values.extend(r.thetas);
        log_prior.extend(r.log_prior);
        log_lik.extend(r.log_lik);
        chain_acceptance.push(r.accepted as f64 / r.steps as f64);
        accepted += r.accepted;
        steps += r.steps;
    }
    let acceptance_rate = accepted as f64 / steps as f64;
    let mut warnings = Vec::new();
    if acceptance_rate > 0.95 {
        warnings.push(format!(
            "acceptance rate {acceptance_rate:.3} is near 1: step_sd {step_sd} is too small and the chains barely move"
        ));
    } else if acceptance_rate < 0.05 {
        warnings.push(format!(
            "acceptance rate {acceptance_rate:.3} is near 0: step_sd {step_sd} is too large"
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let mut draws = ParamDraws::new(dim, values, DrawSource::ApproximatePosterior)?;
    draws.log_prior = Some(log_prior);
    draws.log_lik = Some(log_lik);
    Ok(RwmOutput {
        draws,
        acceptance_rate,
        chain_acceptance,
        warnings,
    })
}

fn run_chain(
    target: &Target<'_>,
    warmup: usize,
    keep: usize,
    thin: usize,
    step_sd: f64,
    rng: &mut SimRng,
) -> Result<ChainOutput> {
    let init = target.model.draw_prior(rng)?;
    let z0 = init
        .iter()
        .zip(&target.transforms)
        .map(|(&t, tr)| tr.to_unconstrained(t))
        .collect();
    let mut current = target.evaluate(z0)?;
    if !current.log_target.is_finite() {
        return Err(Error::Initialization(format!(
            "log density {} at initial value {:?}",
            current.log_target, current.theta
        )));
    }
    let dim = current.z.len();
    let total = warmup + keep * thin;
    let mut out = ChainOutput {
        thetas: Vec::with_capacity(keep * dim),
        log_prior: Vec::with_capacity(keep),
        log_lik: Vec::with_capacity(keep),
        accepted: 0,
        steps: 0,
    };
    for it in 0..total {
        let proposal: Vec<f64> = current
            .z
            .iter()
            .map(|&v| v + step_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let candidate = target.evaluate(proposal)?;
        let log_u = rng.random::<f64>().ln();
        if log_u < candidate.log_target - current.log_target {
            current = candidate;
            if it >= warmup {
                out.accepted += 1;
            }
        }
        if it >= warmup {
            out.steps += 1;
            if (it - warmup + 1).is_multiple_of(thin) {
                out.thetas.extend_from_slice(&current.theta);
                out.log_prior.push(current.log_prior);
                out.log_lik.push(current.log_lik);
            }
        }
    }
    Ok(out)
}
