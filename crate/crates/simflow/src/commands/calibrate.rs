//! sbc, post-sbc, freq-calibrate, power and accuracy.

use std::sync::Arc;

use serde_json::json;
use simflow_core::approx::Approximator;
use simflow_core::calibration::{
    estimator_accuracy, power_analysis, run_frequentist_calibration, run_sbc, CalibrationResult, Distance,
    EstimatorSpec, SamplingApproximation, SbcConfig, TestProcedure, ThetaSource,
};
use simflow_core::data::Dataset;
use simflow_core::diagnostics::DEFAULT_BINS;
use simflow_core::model::Model;
use simflow_core::predictive::{run_posterior_sbc, PosteriorSbcConfig};
use simflow_core::statistic::ParamStatistic;
use simflow_core::{Error, Seed};

use super::{
    alpha, observed_data, plan_header, plan_indexed, require_approximator, require_positive, settle, to_value, Job,
    Outcome,
};
use crate::config::Config;
use crate::csv_io::{num, CsvTable};
use crate::error::CliError;
use crate::registry;

fn need_prior(model: &dyn Model) -> Result<(), CliError> {
    if model.capabilities().prior {
        Ok(())
    } else {
        Err(Error::Capability {
            subject: model.name().to_string(),
            capability: "prior sampling",
        }
        .into())
    }
}

fn calibration_outcome(res: CalibrationResult, alpha: f64) -> Outcome {
    let verdicts: Vec<_> = res
        .targets
        .iter()
        .map(|t| {
            json!({
                "target": t.target,
                "chi2_pvalue": t.verdict.chi2_pvalue,
                "ks_pvalue": t.verdict.ks_pvalue,
                "ecdf_inside": t.verdict.ecdf_inside,
                "uniform": t.verdict.passes(alpha),
            })
        })
        .collect();
    let mut table = CsvTable::new("pvalues", &["target", "simulation", "p"]);
    for t in &res.targets {
        for (i, p) in t.pvalues.values().iter().enumerate() {
            table.push(vec![t.target.clone(), i.to_string(), num(*p)]);
        }
    }
    let mut out =
        Outcome::ok(json!({ "alpha": alpha, "verdicts": verdicts, "calibration": to_value(&res) })).table(table);
    if res.skipped > 0 {
        out = out.message(format!("{} of {} simulations skipped", res.skipped, res.s));
    }
    for note in &res.notes {
        out = out.message(note.clone());
    }
    out
}

pub(crate) struct SbcSetup {
    model: Arc<dyn Model>,
    approx: Approximator,
    s: usize,
    m: usize,
    targets: Vec<ParamStatistic>,
    bins: usize,
}

impl SbcSetup {
    pub(crate) fn from_config(cfg: &Config) -> Result<Self, CliError> {
        let model = registry::build_model(cfg)?;
        need_prior(model.as_ref())?;
        require_approximator(cfg)?;
        let s = require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 1000)?)?;
        let m = require_positive("pipeline.M", cfg.usize_or("pipeline", "M", 99)?)?;
        let approx = registry::build_approximator(cfg, m)?;
        approx.check_model(model.as_ref())?;
        let targets = registry::param_targets(cfg, model.as_ref())?;
        let bins = require_positive("pipeline.bins", cfg.usize_or("pipeline", "bins", DEFAULT_BINS)?)?;
        Ok(SbcSetup {
            model,
            approx,
            s,
            m,
            targets,
            bins,
        })
    }

    pub(crate) fn run(&self, seed: Seed) -> simflow_core::Result<CalibrationResult> {
        let mut c = SbcConfig::new(self.s, self.m, seed).with_targets(self.targets.clone());
        c.bins = self.bins;
        run_sbc(self.model.as_ref(), &self.approx, &c)
    }
}

pub(crate) fn sbc(cfg: &Config) -> Result<Job, CliError> {
    let setup = SbcSetup::from_config(cfg)?;
    let alpha = alpha(cfg, 0.01)?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    plan_indexed(
        &mut plan,
        "simulations",
        root,
        setup.s,
        "child(0) prior draw, child(1) data, child(2) approximator, child(3) rank ties",
    );
    Ok(Job::new(plan, move || {
        settle(setup.run(root), |r| calibration_outcome(r, alpha))
    }))
}

pub(crate) fn post_sbc(cfg: &Config) -> Result<Job, CliError> {
    let model = registry::build_model(cfg)?;
    require_approximator(cfg)?;
    let s = require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 500)?)?;
    let d = require_positive("pipeline.D", cfg.usize_or("pipeline", "D", 99)?)?;
    let approx = registry::build_approximator(cfg, d)?;
    approx.check_model(model.as_ref())?;
    let y: Dataset = observed_data(cfg, model.as_ref())?;
    let mut pc = PosteriorSbcConfig::new(s, d, cfg.root_seed());
    pc.targets = registry::param_targets(cfg, model.as_ref())?;
    pc.n_new = cfg.usize_opt("pipeline", "n_new")?;
    pc.bins = require_positive("pipeline.bins", cfg.usize_or("pipeline", "bins", DEFAULT_BINS)?)?;
    let alpha = alpha(cfg, 0.01)?;
    let mut plan = plan_header(cfg);
    super::plan_named(
        &mut plan,
        cfg.root_seed(),
        "reference",
        "posterior draws given the observed data",
    );
    plan_indexed(
        &mut plan,
        "simulations",
        cfg.root_seed(),
        s,
        "child(1) new data, child(2) augmented-posterior approximator, child(3) rank ties",
    );
    Ok(Job::new(plan, move || {
        settle(run_posterior_sbc(model.as_ref(), &approx, &y, &pc), |r| {
            calibration_outcome(r, alpha)
        })
    }))
}

pub(crate) fn frequentist(cfg: &Config) -> Result<Job, CliError> {
    let model = registry::build_model(cfg)?;
    let theta = registry::theta(cfg, "theta", model.as_ref())?
        .ok_or_else(|| CliError::Config("missing required key pipeline.theta".into()))?;
    let est: EstimatorSpec = registry::estimator(cfg, &model)?;
    let m = require_positive("pipeline.M", cfg.usize_or("pipeline", "M", 99)?)?;
    let dist = registry::sampling(cfg, m)?;
    if let SamplingApproximation::Draws(a) = &dist {
        a.check_model(model.as_ref())?;
    }
    let s = require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 1000)?)?;
    let alpha = alpha(cfg, 0.01)?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    plan_indexed(
        &mut plan,
        "simulations",
        root,
        s,
        "child(0) data, child(1) sampling approximation",
    );
    Ok(Job::new(plan, move || {
        settle(
            run_frequentist_calibration(model.as_ref(), &theta, &est, &dist, s, root),
            |r| {
                let mut out = calibration_outcome(r, alpha);
                out.results["estimator"] = json!(est.name);
                out
            },
        )
    }))
}

fn theta_source(cfg: &Config, model: &dyn Model) -> Result<ThetaSource, CliError> {
    match registry::theta(cfg, "theta", model)? {
        Some(t) => Ok(ThetaSource::Fixed(t)),
        None => {
            need_prior(model)?;
            Ok(ThetaSource::Prior)
        }
    }
}

pub(crate) struct PowerSetup {
    model: Arc<dyn Model>,
    source: ThetaSource,
    test: TestProcedure,
    alpha: f64,
    s: usize,
}

impl PowerSetup {
    pub(crate) fn from_config(cfg: &Config) -> Result<Self, CliError> {
        let model = registry::build_model(cfg)?;
        let source = theta_source(cfg, model.as_ref())?;
        let side = registry::side(cfg)?;
        let test = match cfg.str_opt("pipeline", "test")?.unwrap_or("z") {
            "z" => TestProcedure::ZTest {
                null_mean: cfg.f64_or("pipeline", "null_mean", 0.0)?,
                sd: cfg.f64_or("pipeline", "sd", 1.0)?,
                side,
            },
            "t" => TestProcedure::PooledTTest { side },
            "simulation" => TestProcedure::Simulation {
                statistic: registry::data_statistic(cfg.str_opt("pipeline", "statistic")?.unwrap_or("mean"))?,
                theta0: registry::theta(cfg, "theta0", model.as_ref())?
                    .ok_or_else(|| CliError::Config("test = \"simulation\" needs pipeline.theta0".into()))?,
                side,
                s: require_positive("pipeline.S_null", cfg.usize_or("pipeline", "S_null", 1000)?)?,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown test {other:?}; expected z, t or simulation"
                )))
            }
        };
        if matches!(test, TestProcedure::PooledTTest { .. }) && model.data_shape().groups != 2 {
            return Err(CliError::Config(format!(
                "the pooled t-test needs a two-group model, not {}",
                model.name()
            )));
        }
        Ok(PowerSetup {
            alpha: alpha(cfg, 0.05)?,
            s: require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 1000)?)?,
            model,
            source,
            test,
        })
    }

    pub(crate) fn run(&self, seed: Seed) -> simflow_core::Result<simflow_core::calibration::PowerResult> {
        power_analysis(self.model.as_ref(), &self.source, &self.test, self.alpha, self.s, seed)
    }
}

pub(crate) fn power(cfg: &Config) -> Result<Job, CliError> {
    let setup = PowerSetup::from_config(cfg)?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    if matches!(setup.test, TestProcedure::Simulation { .. }) {
        super::plan_named(&mut plan, root, "null", "null distribution");
    }
    plan_indexed(
        &mut plan,
        "simulations",
        root,
        setup.s,
        "child(0) parameter, child(1) data, child(2) rank ties",
    );
    Ok(Job::new(plan, move || {
        settle(setup.run(root), |r| {
            let mut table = CsvTable::new("pvalues", &["simulation", "p"]);
            for (i, p) in r.pvalues.values().iter().enumerate() {
                table.push(vec![i.to_string(), num(*p)]);
            }
            Outcome::ok(json!({ "power": to_value(&r) })).table(table)
        })
    }))
}

pub(crate) struct AccuracySetup {
    model: Arc<dyn Model>,
    source: ThetaSource,
    est: EstimatorSpec,
    distance: Distance,
    s: usize,
}

impl AccuracySetup {
    pub(crate) fn from_config(cfg: &Config) -> Result<Self, CliError> {
        let model = registry::build_model(cfg)?;
        Ok(AccuracySetup {
            source: theta_source(cfg, model.as_ref())?,
            est: registry::estimator(cfg, &model)?,
            distance: registry::distance(cfg)?,
            s: require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 1000)?)?,
            model,
        })
    }

    pub(crate) fn run(&self, seed: Seed) -> simflow_core::Result<simflow_core::calibration::Accuracy> {
        estimator_accuracy(
            self.model.as_ref(),
            &self.source,
            &self.est,
            self.distance,
            self.s,
            seed,
        )
    }
}

pub(crate) fn accuracy(cfg: &Config) -> Result<Job, CliError> {
    let setup = AccuracySetup::from_config(cfg)?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    plan_indexed(
        &mut plan,
        "simulations",
        root,
        setup.s,
        "child(0) parameter, child(1) data",
    );
    Ok(Job::new(plan, move || {
        settle(setup.run(root), |r| Outcome::ok(json!({ "accuracy": to_value(&r) })))
    }))
}
