//! test: Monte Carlo hypothesis test of observed data.

use serde_json::json;
use simflow_core::simtest::{run_simulation_test, SimTestConfig};

use super::{observed_data, plan_header, plan_named, require_positive, settle, to_value, Job, Outcome};
use crate::config::Config;
use crate::csv_io::{num, CsvTable};
use crate::error::CliError;
use crate::registry;

pub(crate) fn test(cfg: &Config) -> Result<Job, CliError> {
    let model = registry::build_model(cfg)?;
    let two_group = model.data_shape().groups == 2;
    let theta0 = match registry::theta(cfg, "theta0", model.as_ref())? {
        Some(t) => t,
        // Two-group null: equal locations, shared scale.
        None if model.name() == "lognormal-two-group" => {
            let h = model.hyperparameters();
            vec![h[0].1, h[0].1, h[1].1]
        }
        None => return Err(CliError::Config("missing required key pipeline.theta0".into())),
    };
    let default_stat = if two_group { "pooled_t" } else { "mean" };
    let statistic = registry::data_statistic(cfg.str_opt("pipeline", "statistic")?.unwrap_or(default_stat))?;
    let side = registry::side(cfg)?;
    let s = require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 10_000)?)?;
    let y = observed_data(cfg, model.as_ref())?;
    let mut tc = SimTestConfig::new(statistic, side, s, cfg.root_seed());
    if let Some(alphas) = cfg.f64_list_opt("pipeline", "alphas")? {
        if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(CliError::Config("pipeline.alphas must lie in (0, 1)".into()));
        }
        tc.alphas = alphas;
    }
    let mut plan = plan_header(cfg);
    let null = plan_named(&mut plan, cfg.root_seed(), "null", "null datasets");
    super::plan_indexed(&mut plan, "null datasets", null, s, "retries use child(i).child(r)");
    plan_named(
        &mut plan,
        cfg.root_seed(),
        "ties",
        "tie-breaking of the observed statistic",
    );
    Ok(Job::new(plan, move || {
        settle(run_simulation_test(model.as_ref(), &theta0, &y, &tc), |r| {
            let mut table = CsvTable::new("null_histogram", &["lower", "upper", "count"]);
            let h = &r.null_histogram;
            for (i, c) in h.counts.iter().enumerate() {
                table.push(vec![num(h.edges[i]), num(h.edges[i + 1]), c.to_string()]);
            }
            let mut out = Outcome::ok(json!({ "theta0": theta0, "test": to_value(&r) })).table(table);
            if r.undefined_draws > 0 {
                out = out.message(format!(
                    "statistic undefined on {} null draws (redrawn)",
                    r.undefined_draws
                ));
            }
            if let Some(rule) = &r.two_sided_rule {
                out = out.message(rule.clone());
            }
            out
        })
    }))
}
