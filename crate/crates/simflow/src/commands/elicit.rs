//! elicit: prior hyperparameters from expert-supplied statistics.

use serde_json::json;
use simflow_core::elicitation::{elicit_prior, model_implied_stats, ElicitationProblem, NelderMeadConfig};

use super::{plan_header, plan_indexed, require_positive, to_value, Job, Outcome};
use crate::config::Config;
use crate::csv_io::{num, read_expert, CsvTable};
use crate::error::CliError;
use crate::registry;

pub(crate) fn elicit(cfg: &Config) -> Result<Job, CliError> {
    let family = registry::build_family(cfg)?;
    let path = cfg
        .path_opt("pipeline", "expert")?
        .ok_or_else(|| CliError::Config("missing required key pipeline.expert (or --expert)".into()))?;
    let expert = read_expert(&path)?;
    let targets = expert
        .targets
        .iter()
        .map(|t| registry::data_statistic(t))
        .collect::<Result<Vec<_>, _>>()?;
    let sims = cfg.usize_or("pipeline", "sims_per_eval", 1000)?;
    let problem = ElicitationProblem::new(
        family.clone(),
        targets,
        expert.probes.clone(),
        expert.values.clone(),
        sims,
    )?;
    let lambda0 = match cfg.f64_list_opt("pipeline", "lambda0")? {
        Some(l) => l,
        None if family.name() == "beta-binomial" => vec![1.0, 1.0],
        None => vec![0.0, 1.0],
    };
    if !family.is_valid(&lambda0) {
        return Err(CliError::Config(format!(
            "pipeline.lambda0 {lambda0:?} is not valid for {}",
            family.name()
        )));
    }
    let d = NelderMeadConfig::default();
    let nm = NelderMeadConfig {
        initial_step: cfg.f64_or("pipeline", "initial_step", d.initial_step)?,
        tolerance: cfg.f64_or("pipeline", "tolerance", d.tolerance)?,
        max_iter: require_positive("pipeline.max_iter", cfg.usize_or("pipeline", "max_iter", d.max_iter)?)?,
    };
    let identifiability = problem.identifiability();
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    plan.push("every loss evaluation reuses the root seed (common random numbers)".into());
    plan_indexed(
        &mut plan,
        "prior-predictive simulations",
        root,
        sims,
        "child(0) parameter, child(1) data",
    );
    Ok(Job::new(plan, move || {
        let res = match elicit_prior(&problem, &lambda0, &nm, root) {
            Ok(r) => r,
            Err(e) => return Outcome::failed(serde_json::Value::Null, e.into()),
        };
        let mut trace = CsvTable::new("loss_trace", &["iteration", "loss"]);
        for (i, l) in res.loss_trace.iter().enumerate() {
            trace.push(vec![i.to_string(), num(*l)]);
        }
        let mut fit = CsvTable::new("fit", &["target", "probe", "expert", "implied"]);
        let implied = model_implied_stats(
            problem.family.as_ref(),
            &problem.targets,
            &problem.probes,
            &res.lambda_star,
            problem.sims_per_eval,
            root,
        )
        .unwrap_or_default();
        let np = expert.probes.len();
        for (k, t) in expert.targets.iter().enumerate() {
            for (j, p) in expert.probes.iter().enumerate() {
                let i = k * np + j;
                fit.push(vec![
                    t.clone(),
                    num(*p),
                    num(expert.values[i]),
                    implied.get(i).map_or_else(String::new, |v| num(*v)),
                ]);
            }
        }
        let mut out = Outcome::ok(json!({
            "family": problem.family.name(),
            "lambda0": lambda0,
            "elicitation": to_value(&res),
            "implied_stats": implied,
            "expert_stats": expert.values,
        }))
        .table(trace)
        .table(fit);
        if identifiability.underdetermined {
            out = out.message(format!(
                "{} statistics for {} hyperparameters: the fit is underdetermined",
                identifiability.statistics, identifiability.lambda_dim
            ));
        }
        if !res.converged {
            out = out.message(format!(
                "simplex search stopped after {} iterations without converging",
                res.iterations
            ));
        }
        out
    }))
}
