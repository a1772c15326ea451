//! Posterior approximators: the objects whose calibration gets checked.
//!
//! An [`Approximator`] maps a dataset to M parameter draws. The exact
//! conjugate sampler is the calibrated reference; the perturbed variant is a
//! negative control with a known defect; random-walk Metropolis and
//! rejection ABC are the generic likelihood-based and simulator-based
//! routes.

mod abc;
mod conjugate;
mod rwm;

pub use abc::{abc_rejection, AbcAcceptance, AbcConfig, AbcOutput, ProposalPool};
pub use conjugate::{exact_conjugate, perturbed_conjugate, Perturbation};
pub use rwm::{rwm_sample, RwmConfig, RwmOutput};

use crate::data::{Dataset, ParamDraws};
use crate::model::Model;
use crate::rng::Seed;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum ApproximatorKind {
    ExactConjugate,
    PerturbedConjugate(Perturbation),
    RandomWalkMetropolis(RwmConfig),
    AbcRejection(AbcConfig),
}

#[derive(Debug, Clone)]
pub struct Approximator {
    pub kind: ApproximatorKind,
    /// Default number of draws M.
    pub draws: usize,
}

impl Approximator {
    pub fn new(kind: ApproximatorKind, draws: usize) -> Self {
        Approximator { kind, draws }
    }

    pub fn exact(draws: usize) -> Self {
        Self::new(ApproximatorKind::ExactConjugate, draws)
    }

    pub fn perturbed(mean_shift: f64, sd_scale: f64, draws: usize) -> Result<Self> {
        Ok(Self::new(
            ApproximatorKind::PerturbedConjugate(Perturbation::new(mean_shift, sd_scale)?),
            draws,
        ))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ApproximatorKind::ExactConjugate => "exact_conjugate",
            ApproximatorKind::PerturbedConjugate(_) => "perturbed_conjugate",
            ApproximatorKind::RandomWalkMetropolis(_) => "random_walk_metropolis",
            ApproximatorKind::AbcRejection(_) => "abc_rejection",
        }
    }

    /// Checks that `model` offers what this approximator needs.
    pub fn check_model(&self, model: &dyn Model) -> Result<()> {
        let caps = model.capabilities();
        let (ok, what) = match self.kind {
            ApproximatorKind::ExactConjugate | ApproximatorKind::PerturbedConjugate(_) => {
                (caps.analytic_posterior, "analytic posterior")
            }
            ApproximatorKind::RandomWalkMetropolis(_) => (
                caps.log_prior && caps.log_likelihood && caps.prior,
                "log prior and log likelihood",
            ),
            ApproximatorKind::AbcRejection(_) => (caps.prior, "prior sampling"),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::capability(model.name(), what))
        }
    }

    pub fn approximate(&self, model: &dyn Model, y: &Dataset, seed: Seed) -> Result<ParamDraws> {
        self.approximate_n(model, y, self.draws, seed)
    }

    /// Like [`Approximator::approximate`] with an explicit draw count.
    pub fn approximate_n(&self, model: &dyn Model, y: &Dataset, m: usize, seed: Seed) -> Result<ParamDraws> {
        if m == 0 {
            return Err(Error::invalid("an approximator must return at least one draw"));
        }
        self.check_model(model)?;
        match &self.kind {
            ApproximatorKind::ExactConjugate => exact_conjugate(model, y, m, seed),
            ApproximatorKind::PerturbedConjugate(p) => perturbed_conjugate(model, y, p, m, seed),
            ApproximatorKind::RandomWalkMetropolis(cfg) => {
                let out = cfg.run(model, y, m, seed)?;
                Ok(out.draws)
            }
            ApproximatorKind::AbcRejection(cfg) => Ok(abc_rejection(model, y, cfg, m, seed)?.draws),
        }
    }
}
