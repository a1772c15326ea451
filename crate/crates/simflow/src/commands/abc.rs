//! abc: rejection ABC on observed data.

use serde_json::json;
use simflow_core::approx::abc_rejection;
use simflow_core::stats;

use super::{observed_data, plan_header, require_positive, Job, Outcome};
use crate::config::Config;
use crate::csv_io::{num, CsvTable};
use crate::error::CliError;
use crate::registry;

pub(crate) fn abc(cfg: &Config) -> Result<Job, CliError> {
    let model = registry::build_model(cfg)?;
    if let Some(name) = cfg.str_opt("approximator", "name")? {
        if name != "abc" {
            return Err(CliError::Config(format!(
                "the abc command runs approximator abc, not {name}"
            )));
        }
    }
    let abc = registry::abc_config(cfg)?;
    if !model.capabilities().prior {
        return Err(simflow_core::Error::Capability {
            subject: model.name().to_string(),
            capability: "prior sampling",
        }
        .into());
    }
    let m = require_positive("pipeline.M", cfg.usize_or("pipeline", "M", 1000)?)?;
    let y = observed_data(cfg, model.as_ref())?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    plan.push(format!(
        "proposals: proposal i uses child(i) of {}; child(0) parameter, child(1) data",
        root.0
    ));
    Ok(Job::new(plan, move || {
        match abc_rejection(model.as_ref(), &y, &abc, m, root) {
            Ok(out) => {
                let dim = out.draws.dim();
                let mean: Vec<f64> = (0..dim).map(|j| stats::mean(&out.draws.column(j))).collect();
                let var: Vec<f64> = (0..dim).map(|j| stats::variance(&out.draws.column(j))).collect();
                let header: Vec<String> = (0..dim).map(|j| format!("theta[{j}]")).collect();
                let mut table = CsvTable::new("draws", &header.iter().map(String::as_str).collect::<Vec<_>>());
                for row in out.draws.rows() {
                    table.push(row.iter().map(|v| num(*v)).collect());
                }
                Outcome::ok(json!({
                    "abc": {
                        "acceptance_rate": out.acceptance_rate,
                        "proposals": out.proposals,
                        "accepted": out.accepted,
                        "epsilon": out.epsilon,
                        "draw_mean": mean,
                        "draw_variance": var,
                    }
                }))
                .table(table)
            }
            Err(e) => {
                let partial = match e.root() {
                    simflow_core::Error::Budget {
                        accepted,
                        requested,
                        proposals,
                        acceptance_rate,
                    } => json!({ "abc": {
                        "acceptance_rate": acceptance_rate,
                        "proposals": proposals,
                        "accepted": accepted,
                        "requested": requested,
                    }}),
                    _ => serde_json::Value::Null,
                };
                Outcome::failed(partial, e.into())
            }
        }
    }))
}
