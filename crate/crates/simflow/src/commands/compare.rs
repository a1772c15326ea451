//! compare: evidence and posterior model probabilities.

use serde_json::json;
use simflow_core::compare::{posterior_model_probs, ModelSet};

use super::{load_data, plan_header, plan_indexed, require_positive, settle, to_value, Job, Outcome};
use crate::config::{as_f64, Config};
use crate::csv_io::{num, CsvTable};
use crate::error::CliError;
use crate::registry;

pub(crate) fn compare(cfg: &Config) -> Result<Job, CliError> {
    let entries = cfg.table_list("models")?;
    if entries.len() < 2 {
        return Err(CliError::Config("compare needs at least two [[models]] entries".into()));
    }
    let mut models = Vec::with_capacity(entries.len());
    let mut priors = Vec::with_capacity(entries.len());
    for t in &entries {
        let m = registry::build_model_from(t, &["prior"])?;
        if !m.capabilities().prior || !m.capabilities().log_likelihood {
            return Err(simflow_core::Error::Capability {
                subject: m.name().to_string(),
                capability: "prior sampling and log likelihood",
            }
            .into());
        }
        priors.push(match t.get("prior") {
            None => 1.0,
            Some(v) => as_f64(v).ok_or_else(|| CliError::Config("[[models]] prior must be a number".into()))?,
        });
        models.push(m);
    }
    let total: f64 = priors.iter().sum();
    let set = ModelSet::new(models.clone(), priors.iter().map(|p| p / total).collect())?;
    let path = cfg
        .path_opt("pipeline", "data")?
        .ok_or_else(|| CliError::Config("missing required key pipeline.data (or --data)".into()))?;
    let y = load_data(&path, models[0].as_ref())?;
    let s = require_positive("pipeline.S", cfg.usize_or("pipeline", "S", 10_000)?)?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    for l in 0..models.len() {
        plan_indexed(
            &mut plan,
            &format!("model {l} prior draws"),
            root.child(l as u64),
            s,
            "one parameter draw per task",
        );
    }
    let labels: Vec<String> = entries
        .iter()
        .map(|t| {
            let mut parts: Vec<String> = t
                .iter()
                .filter(|(k, _)| *k != "name" && *k != "prior")
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            parts.sort();
            format!("{}({})", t["name"].as_str().unwrap_or("?"), parts.join(","))
        })
        .collect();
    Ok(Job::new(plan, move || {
        settle(posterior_model_probs(&set, &y, s, root), |c| {
            let mut table = CsvTable::new(
                "evidence",
                &["model", "log_evidence", "mc_se", "prior_prob", "posterior_prob"],
            );
            for (i, e) in c.evidence.iter().enumerate() {
                table.push(vec![
                    labels[i].clone(),
                    num(e.log_evidence),
                    e.mc_se.map_or_else(String::new, num),
                    num(c.prior_probs[i]),
                    num(c.posterior_probs[i]),
                ]);
            }
            let mut out = Outcome::ok(json!({ "models": labels, "comparison": to_value(&c) })).table(table);
            for e in &c.evidence {
                if let Some(d) = &e.diagnostic {
                    out = out.message(format!("{}: {d}", e.model));
                }
            }
            out
        })
    }))
}
