//! ppc and prior-check.

use serde_json::json;
use simflow_core::predictive::{
    frequentist_predictive_check, posterior_predictive_check, pushforward_check, PlausibleRegion, PredictiveResult,
    PushforwardSource,
};

use super::{observed_data, plan_header, plan_indexed, plan_named, require_positive, settle, to_value, Job, Outcome};
use crate::config::{as_f64, Config};
use crate::csv_io::{num, CsvTable};
use crate::error::CliError;
use crate::registry;

fn replication_table(r: &PredictiveResult) -> CsvTable {
    let mut t = CsvTable::new("replications", &["replication", &r.statistic]);
    for (i, v) in r.replication_stats.iter().enumerate() {
        t.push(vec![i.to_string(), num(*v)]);
    }
    t
}

fn predictive_outcome(r: PredictiveResult, extra: serde_json::Value) -> Outcome {
    let table = replication_table(&r);
    let mut results = json!({ "predictive": to_value(&r) });
    if let (Some(obj), serde_json::Value::Object(more)) = (results.as_object_mut(), extra) {
        obj.extend(more);
    }
    let mut out = Outcome::ok(results).table(table);
    if r.undefined > 0 {
        out = out.message(format!(
            "statistic undefined on {} replications (left out)",
            r.undefined
        ));
    }
    out
}

pub(crate) fn ppc(cfg: &Config) -> Result<Job, CliError> {
    let model = registry::build_model(cfg)?;
    let stat = registry::data_statistic(cfg.str_opt("pipeline", "statistic")?.unwrap_or("mean"))?;
    let disc = registry::discrepancy(cfg.str_opt("pipeline", "discrepancy")?.unwrap_or("difference"), stat)?;
    let side = registry::side(cfg)?;
    let s = require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 1000)?)?;
    let y = observed_data(cfg, model.as_ref())?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    match cfg.str_opt("pipeline", "mode")?.unwrap_or("posterior") {
        "posterior" => {
            let m = require_positive("pipeline.M", cfg.usize_or("pipeline", "M", 1000)?)?;
            let approx = registry::build_approximator(cfg, m)?;
            approx.check_model(model.as_ref())?;
            let post = plan_named(&mut plan, root, "posterior", "posterior draws");
            let reps = plan_named(&mut plan, root, "replications", "replicated datasets");
            plan_indexed(&mut plan, "replications", reps, s, "one dataset per task");
            plan_named(&mut plan, reps, "subsample", "posterior draw per replication");
            Ok(Job::new(plan, move || {
                settle(approx.approximate(model.as_ref(), &y, post), |draws| {
                    settle(
                        posterior_predictive_check(model.as_ref(), &draws, &disc, &y, side, s, reps),
                        |r| predictive_outcome(r, json!({ "mode": "posterior", "approximator": approx.name() })),
                    )
                })
            }))
        }
        "frequentist" => {
            let theta = registry::theta(cfg, "theta", model.as_ref())?
                .ok_or_else(|| CliError::Config("frequentist mode needs the estimate pipeline.theta".into()))?;
            plan_indexed(&mut plan, "replications", root, s, "one dataset per task");
            Ok(Job::new(plan, move || {
                settle(
                    frequentist_predictive_check(model.as_ref(), &theta, &disc, &y, side, s, root),
                    |r| predictive_outcome(r, json!({ "mode": "frequentist", "theta": theta })),
                )
            }))
        }
        other => Err(CliError::Config(format!(
            "unknown ppc mode {other:?}; expected posterior or frequentist"
        ))),
    }
}

fn plausible_set(cfg: &Config, dim: usize) -> Result<Option<Vec<Vec<f64>>>, CliError> {
    let Some(v) = cfg.get("pipeline", "plausible") else {
        return Ok(None);
    };
    let bad = || {
        CliError::Config(format!(
            "pipeline.plausible must be an array of {dim}-element number arrays"
        ))
    };
    let rows = v.as_array().ok_or_else(bad)?;
    let parsed: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.as_array()
                .filter(|a| a.len() == dim)
                .and_then(|a| a.iter().map(as_f64).collect::<Option<Vec<f64>>>())
                .ok_or_else(bad)
        })
        .collect::<Result<_, _>>()?;
    if parsed.is_empty() {
        return Err(bad());
    }
    Ok(Some(parsed))
}

pub(crate) fn prior_check(cfg: &Config) -> Result<Job, CliError> {
    let model = registry::build_model(cfg)?;
    let stat = registry::data_statistic(cfg.str_opt("pipeline", "statistic")?.unwrap_or("mean"))?;
    let bound = |key: &str, default: f64| cfg.f64_or("pipeline", key, default);
    let region = PlausibleRegion::new(
        bound("region_lower", f64::NEG_INFINITY)?,
        bound("region_upper", f64::INFINITY)?,
    )?;
    let source = match plausible_set(cfg, model.param_dim())? {
        Some(set) => {
            for t in &set {
                model.check_theta(t)?;
            }
            PushforwardSource::Plausible(set)
        }
        None => {
            if !model.capabilities().prior {
                return Err(simflow_core::Error::Capability {
                    subject: model.name().to_string(),
                    capability: "prior sampling",
                }
                .into());
            }
            PushforwardSource::Prior
        }
    };
    let s = require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 1000)?)?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    plan_indexed(&mut plan, "replications", root, s, "child(0) parameter, child(1) data");
    let region_json = json!({
        "lower": region.lower.is_finite().then_some(region.lower),
        "upper": region.upper.is_finite().then_some(region.upper),
    });
    Ok(Job::new(plan, move || {
        settle(
            pushforward_check(model.as_ref(), &source, &stat, &region, s, root),
            |r| predictive_outcome(r, json!({ "region": region_json })),
        )
    }))
}
