//! Name-based construction of models, approximators and statistics.

use std::collections::BTreeMap;
use std::sync::Arc;

use simflow_core::approx::{AbcAcceptance, AbcConfig, Approximator, ApproximatorKind, RwmConfig};
use simflow_core::calibration::{Distance, EstimatorSpec, SamplingApproximation};
use simflow_core::elicitation::{BetaBinomialFamily, NormalNormalFamily, PriorFamily};
use simflow_core::model::{BetaBinomial, LogNormalTwoGroup, Model, NormalNormal, PoissonGamma};
use simflow_core::simtest::Side;
use simflow_core::statistic::{DataStatistic, Discrepancy, ParamStatistic};
use toml::{Table, Value};

use crate::config::{as_f64, Config};
use crate::error::CliError;

pub const MODELS: [&str; 4] = ["normal-normal", "beta-binomial", "poisson-gamma", "lognormal-two-group"];
pub const APPROXIMATORS: [&str; 4] = ["exact", "perturbed", "rwm", "abc"];

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Hyperparameter keys and defaults per model name.
fn model_defaults(name: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match name {
        "normal-normal" => &[("mu0", 0.0), ("tau0", 1.0), ("sigma", 1.0), ("n", 10.0)],
        "beta-binomial" => &[("a", 1.0), ("b", 1.0), ("trials", 10.0), ("n", 1.0)],
        "poisson-gamma" => &[("shape", 2.0), ("rate", 1.0), ("n", 10.0)],
        "lognormal-two-group" => &[("mu", 2.0), ("sigma", 2.0), ("n", 40.0)],
        _ => return None,
    })
}

/// Resolves hyperparameters from a model table; keys other than `name` and
/// the listed `extra` ones must be hyperparameters of the model.
fn hyperparameters(name: &str, table: &Table, extra: &[&str]) -> Result<BTreeMap<&'static str, f64>, CliError> {
    let defaults = model_defaults(name)
        .ok_or_else(|| err(format!("unknown model {name:?}; expected one of {}", MODELS.join(", "))))?;
    for key in table.keys() {
        if key != "name" && !extra.contains(&key.as_str()) && !defaults.iter().any(|(k, _)| k == key) {
            return Err(err(format!("model {name} has no hyperparameter {key:?}")));
        }
    }
    defaults
        .iter()
        .map(|&(k, d)| {
            let v = match table.get(k) {
                None => d,
                Some(v) => as_f64(v).ok_or_else(|| err(format!("model.{k} must be a number")))?,
            };
            Ok((k, v))
        })
        .collect()
}

fn count(h: &BTreeMap<&str, f64>, key: &str) -> Result<u64, CliError> {
    let v = h[key];
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as u64)
    } else {
        Err(err(format!("model.{key} must be a non-negative integer, got {v}")))
    }
}

pub fn build_model_from(table: &Table, extra: &[&str]) -> Result<Arc<dyn Model>, CliError> {
    let name = table
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| err("missing required key model.name"))?;
    let h = hyperparameters(name, table, extra)?;
    let n = count(&h, "n")? as usize;
    let model: Arc<dyn Model> = match name {
        "normal-normal" => Arc::new(NormalNormal::new(h["mu0"], h["tau0"], h["sigma"], n)?),
        "beta-binomial" => Arc::new(BetaBinomial::new(h["a"], h["b"], count(&h, "trials")?, n)?),
        "poisson-gamma" => Arc::new(PoissonGamma::new(h["shape"], h["rate"], n)?),
        "lognormal-two-group" => Arc::new(LogNormalTwoGroup::new(h["mu"], h["sigma"], n)?),
        _ => unreachable!("checked by hyperparameters"),
    };
    Ok(model)
}

pub fn build_model(cfg: &Config) -> Result<Arc<dyn Model>, CliError> {
    let table = cfg.section("model").cloned().unwrap_or_default();
    build_model_from(&table, &[])
}

/// Elicitation family named by `model.name`, observation settings from the
/// same section.
pub fn build_family(cfg: &Config) -> Result<Arc<dyn PriorFamily>, CliError> {
    let name = cfg.str_req("model", "name")?;
    let n = cfg.usize_or("model", "n", 1)?;
    Ok(match name {
        "beta-binomial" => Arc::new(BetaBinomialFamily {
            trials: cfg.usize_or("model", "trials", 10)? as u64,
            n,
        }),
        "normal-normal" => {
            let sigma = cfg.f64_or("model", "sigma", 1.0)?;
            if sigma.is_nan() || sigma <= 0.0 {
                return Err(err("model.sigma must be positive"));
            }
            Arc::new(NormalNormalFamily { sigma, n })
        }
        other => {
            return Err(err(format!(
                "no prior family for model {other:?}; expected beta-binomial or normal-normal"
            )))
        }
    })
}

pub fn data_statistic(name: &str) -> Result<DataStatistic, CliError> {
    DataStatistic::parse(name).ok_or_else(|| err(format!("unknown data statistic {name:?}")))
}

pub fn discrepancy(kind: &str, stat: DataStatistic) -> Result<Discrepancy, CliError> {
    match kind {
        "difference" => Ok(Discrepancy::Difference(stat)),
        "abs_difference" => Ok(Discrepancy::AbsDifference(stat)),
        other => Err(err(format!(
            "unknown discrepancy {other:?}; expected difference or abs_difference"
        ))),
    }
}

/// `theta[i]`, or `mean_difference` for the two-group model.
pub fn param_statistic(name: &str, model: &dyn Model) -> Result<ParamStatistic, CliError> {
    if let Some(i) = name.strip_prefix("theta[").and_then(|r| r.strip_suffix(']')) {
        let i: usize = i.parse().map_err(|_| err(format!("bad target {name:?}")))?;
        if i >= model.param_dim() {
            return Err(err(format!(
                "target {name} out of range for {} with {} parameters",
                model.name(),
                model.param_dim()
            )));
        }
        return Ok(ParamStatistic::Component(i));
    }
    if name == "mean_difference" && model.name() == "lognormal-two-group" {
        return Ok(ParamStatistic::custom(
            "mean_difference",
            LogNormalTwoGroup::mean_difference,
        ));
    }
    Err(err(format!("unknown parameter target {name:?}; use theta[i]")))
}

pub fn param_targets(cfg: &Config, model: &dyn Model) -> Result<Vec<ParamStatistic>, CliError> {
    match cfg.str_list_opt("pipeline", "targets")? {
        None => Ok(ParamStatistic::all_components(model.param_dim())),
        Some(names) => names.iter().map(|n| param_statistic(n, model)).collect(),
    }
}

pub fn side(cfg: &Config) -> Result<Side, CliError> {
    match cfg.str_opt("pipeline", "side")? {
        None => Ok(Side::default()),
        Some(s) => Side::parse(s).ok_or_else(|| err(format!("unknown side {s:?}; expected lower, upper or two_sided"))),
    }
}

/// Approximator from `[approximator]` returning `m` draws by default.
pub fn build_approximator(cfg: &Config, m: usize) -> Result<Approximator, CliError> {
    let name = cfg.str_opt("approximator", "name")?.unwrap_or("exact");
    let known: &[&str] = match name {
        "exact" => &[],
        "perturbed" => &["mean_shift", "sd_scale"],
        "rwm" => &["chains", "warmup", "thin", "step_sd"],
        "abc" => &["statistic", "discrepancy", "epsilon", "quantile", "max_proposals"],
        other => {
            return Err(err(format!(
                "unknown approximator {other:?}; expected one of {}",
                APPROXIMATORS.join(", ")
            )))
        }
    };
    if let Some(t) = cfg.section("approximator") {
        if let Some(k) = t.keys().find(|k| *k != "name" && !known.contains(&k.as_str())) {
            return Err(err(format!("approximator {name} has no setting {k:?}")));
        }
    }
    let kind = match name {
        "exact" => ApproximatorKind::ExactConjugate,
        "perturbed" => {
            return Ok(Approximator::perturbed(
                cfg.f64_or("approximator", "mean_shift", 0.0)?,
                cfg.f64_or("approximator", "sd_scale", 1.0)?,
                m,
            )?)
        }
        "rwm" => {
            let d = RwmConfig::default();
            ApproximatorKind::RandomWalkMetropolis(RwmConfig {
                chains: cfg.usize_or("approximator", "chains", d.chains)?,
                warmup: cfg.usize_or("approximator", "warmup", d.warmup)?,
                thin: cfg.usize_or("approximator", "thin", d.thin)?,
                step_sd: cfg.f64_or("approximator", "step_sd", d.step_sd)?,
            })
        }
        _ => ApproximatorKind::AbcRejection(abc_config(cfg)?),
    };
    Ok(Approximator::new(kind, m))
}

pub fn abc_config(cfg: &Config) -> Result<AbcConfig, CliError> {
    let stat = data_statistic(cfg.str_opt("approximator", "statistic")?.unwrap_or("mean"))?;
    let distance = discrepancy(
        cfg.str_opt("approximator", "discrepancy")?.unwrap_or("abs_difference"),
        stat,
    )?;
    let acceptance = match (
        cfg.f64_opt("approximator", "epsilon")?,
        cfg.f64_opt("approximator", "quantile")?,
    ) {
        (Some(_), Some(_)) => return Err(err("set only one of approximator.epsilon and approximator.quantile")),
        (Some(eps), None) => AbcAcceptance::Tolerance(eps),
        (None, Some(q)) => AbcAcceptance::Quantile(q),
        (None, None) => AbcAcceptance::Tolerance(0.0),
    };
    let max_proposals = cfg.usize_or("approximator", "max_proposals", 1_000_000)?;
    Ok(AbcConfig::new(distance, acceptance, max_proposals)?)
}

pub fn estimator(cfg: &Config, model: &Arc<dyn Model>) -> Result<EstimatorSpec, CliError> {
    let name = cfg.str_opt("pipeline", "estimator")?.unwrap_or("sample_mean");
    let spec = match name {
        "sample_mean" => {
            let target = match cfg.str_opt("pipeline", "target")? {
                None => ParamStatistic::Component(0),
                Some(t) => param_statistic(t, model.as_ref())?,
            };
            match target {
                ParamStatistic::Component(i) => EstimatorSpec::sample_mean(i),
                ParamStatistic::Custom { .. } => return Err(err("sample_mean estimates a theta[i] target")),
            }
        }
        "mean_difference" => {
            let target = param_statistic(
                cfg.str_opt("pipeline", "target")?.unwrap_or("mean_difference"),
                model.as_ref(),
            )?;
            EstimatorSpec::mean_difference(target)
        }
        "posterior_mean" => {
            if !model.capabilities().analytic_posterior {
                return Err(simflow_core::Error::Capability {
                    subject: model.name().to_string(),
                    capability: "analytic posterior",
                }
                .into());
            }
            EstimatorSpec::posterior_mean(Arc::clone(model))
        }
        other => {
            return Err(err(format!(
                "unknown estimator {other:?}; expected sample_mean, mean_difference or posterior_mean"
            )))
        }
    };
    Ok(match cfg.f64_opt("pipeline", "level")? {
        Some(level) if !(level > 0.0 && level < 1.0) => return Err(err("pipeline.level must be in (0, 1)")),
        Some(level) => spec.with_interval(level),
        None => spec,
    })
}

pub fn sampling(cfg: &Config, m: usize) -> Result<SamplingApproximation, CliError> {
    Ok(match cfg.str_opt("pipeline", "sampling")?.unwrap_or("normal_plug_in") {
        "normal" => SamplingApproximation::Normal {
            sd: cfg
                .f64_opt("pipeline", "sampling_sd")?
                .ok_or_else(|| err("sampling = \"normal\" needs pipeline.sampling_sd"))?,
        },
        "normal_plug_in" => SamplingApproximation::NormalPlugIn,
        "student_t" => SamplingApproximation::StudentT,
        "draws" => SamplingApproximation::Draws(build_approximator(cfg, m)?),
        other => {
            return Err(err(format!(
                "unknown sampling approximation {other:?}; expected normal, normal_plug_in, student_t or draws"
            )))
        }
    })
}

pub fn distance(cfg: &Config) -> Result<Distance, CliError> {
    match cfg.str_opt("pipeline", "distance")?.unwrap_or("squared") {
        "squared" => Ok(Distance::Squared),
        "absolute" => Ok(Distance::Absolute),
        other => Err(err(format!("unknown distance {other:?}; expected squared or absolute"))),
    }
}

/// Parameter vector from `pipeline.<key>`, checked against the model.
pub fn theta(cfg: &Config, key: &str, model: &dyn Model) -> Result<Option<Vec<f64>>, CliError> {
    let Some(theta) = cfg.f64_list_opt("pipeline", key)? else {
        return Ok(None);
    };
    if theta.len() != model.param_dim() {
        return Err(err(format!(
            "pipeline.{key} has {} entries but {} has {} parameters",
            theta.len(),
            model.name(),
            model.param_dim()
        )));
    }
    model.check_theta(&theta)?;
    Ok(Some(theta))
}
