//! sensitivity: hyperparameter sweeps and power-scaling of posterior draws.
//!
//! With a `[grid]` section the command sweeps the Cartesian product of the
//! listed `section.key` values through the pipeline named by
//! `pipeline.sweep`. Without one it power-scales the prior and likelihood of
//! draws from the configured approximator. Data pre-processing choices are
//! outside what either mode can vary.

use serde_json::json;
use simflow_core::sensitivity::{attach_densities, grid_product, power_scale_weights, sensitivity_sweep, GridPoint};
use simflow_core::{Error, Seed};
use toml::Value;

use super::calibrate::{AccuracySetup, PowerSetup, SbcSetup};
use super::{alpha, observed_data, plan_header, plan_indexed, plan_named, require_positive, to_value, Job, Outcome};
use crate::config::{as_f64, Config};
use crate::csv_io::{num, CsvTable};
use crate::error::CliError;
use crate::registry;

enum Cell {
    Sbc(SbcSetup, f64),
    Power(PowerSetup),
    Accuracy(AccuracySetup),
}

impl Cell {
    fn new(kind: &str, cfg: &Config) -> Result<Cell, CliError> {
        Ok(match kind {
            "sbc" => Cell::Sbc(SbcSetup::from_config(cfg)?, alpha(cfg, 0.01)?),
            "power" => Cell::Power(PowerSetup::from_config(cfg)?),
            "accuracy" => Cell::Accuracy(AccuracySetup::from_config(cfg)?),
            other => {
                return Err(CliError::Config(format!(
                    "pipeline.sweep must be sbc, power or accuracy, got {other:?}"
                )))
            }
        })
    }

    fn summary(&self, seed: Seed) -> simflow_core::Result<Vec<(String, f64)>> {
        Ok(match self {
            Cell::Sbc(setup, alpha) => setup
                .run(seed)?
                .targets
                .iter()
                .flat_map(|t| {
                    let v = &t.verdict;
                    [
                        (format!("{}.chi2_pvalue", t.target), v.chi2_pvalue),
                        (format!("{}.ks_pvalue", t.target), v.ks_pvalue),
                        (format!("{}.ecdf_inside", t.target), f64::from(u8::from(v.ecdf_inside))),
                        (format!("{}.uniform", t.target), f64::from(u8::from(v.passes(*alpha)))),
                    ]
                })
                .collect(),
            Cell::Power(setup) => {
                let r = setup.run(seed)?;
                vec![("power".into(), r.power), ("se".into(), r.se)]
            }
            Cell::Accuracy(setup) => {
                let r = setup.run(seed)?;
                vec![("mean".into(), r.mean), ("mc_se".into(), r.mc_se)]
            }
        })
    }
}

fn axes(cfg: &Config) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    let grid = cfg.section("grid").cloned().unwrap_or_default();
    grid.iter()
        .map(|(k, v)| {
            let bad = || CliError::Config(format!("grid.{k:?} must be an array of numbers"));
            let values: Vec<f64> = match v {
                Value::Array(a) if !a.is_empty() => {
                    a.iter().map(|x| as_f64(x).ok_or_else(bad)).collect::<Result<_, _>>()?
                }
                _ => return Err(bad()),
            };
            Ok((k.clone(), values))
        })
        .collect()
}

fn sweep(cfg: &Config) -> Result<Job, CliError> {
    let kind = cfg.str_req("pipeline", "sweep")?.to_string();
    let grid: Vec<GridPoint> = grid_product(&axes(cfg)?);
    // Every cell is validated before anything runs.
    let cells = grid
        .iter()
        .map(|point| {
            let c = point
                .iter()
                .try_fold(cfg.clone(), |c, (k, v)| c.with_override(k, Value::Float(*v)))?;
            Cell::new(&kind, &c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let root = cfg.root_seed();
    let mut plan = plan_header(cfg);
    plan_indexed(
        &mut plan,
        "grid cells",
        root,
        grid.len(),
        "each cell runs its pipeline from its own seed",
    );
    Ok(Job::new(plan, move || {
        // Equal grid points carry equal configurations, so the first match
        // is always the right cell.
        let rows = sensitivity_sweep(&grid, root, |point, seed| {
            let i = grid.iter().position(|p| p == point).expect("point of this grid");
            cells[i].summary(seed)
        });
        let rows = match rows {
            Ok(r) => r,
            Err(e) => return Outcome::failed(serde_json::Value::Null, e.into()),
        };
        let keys: Vec<String> = grid
            .first()
            .map(|p| p.iter().map(|(k, _)| k.clone()).collect())
            .unwrap_or_default();
        let outputs: Vec<String> = rows
            .iter()
            .find(|r| r.error.is_none())
            .map(|r| r.outputs.iter().map(|(k, _)| k.clone()).collect())
            .unwrap_or_default();
        let header: Vec<&str> = ["index", "seed"]
            .into_iter()
            .chain(keys.iter().map(String::as_str))
            .chain(outputs.iter().map(String::as_str))
            .chain(["error"])
            .collect();
        let mut table = CsvTable::new("sweep", &header);
        for r in &rows {
            let mut row = vec![r.index.to_string(), r.seed.0.to_string()];
            row.extend(r.config.iter().map(|(_, v)| num(*v)));
            row.extend(outputs.iter().map(|k| {
                r.outputs
                    .iter()
                    .find(|(n, _)| n == k)
                    .map_or_else(String::new, |(_, v)| num(*v))
            }));
            row.push(r.error.clone().unwrap_or_default());
            table.push(row);
        }
        let failed = rows.iter().filter(|r| r.error.is_some()).count();
        let results = json!({ "sweep": kind, "rows": to_value(&rows) });
        if failed > 0 {
            let mut out = Outcome::failed(
                results,
                CliError::Partial(format!("{failed} of {} grid cells failed", rows.len())),
            );
            out.tables.push(table);
            out
        } else {
            Outcome::ok(results).table(table)
        }
    }))
}

fn power_scaling(cfg: &Config) -> Result<Job, CliError> {
    let model = registry::build_model(cfg)?;
    let m = require_positive("pipeline.M", cfg.usize_or("pipeline", "M", 4000)?)?;
    let approx = registry::build_approximator(cfg, m)?;
    approx.check_model(model.as_ref())?;
    let caps = model.capabilities();
    if !(caps.log_prior && caps.log_likelihood) {
        return Err(Error::Capability {
            subject: model.name().to_string(),
            capability: "log prior and log likelihood",
        }
        .into());
    }
    let y = observed_data(cfg, model.as_ref())?;
    let alpha_prior = cfg
        .f64_list_opt("pipeline", "alpha_prior")?
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let alpha_lik = cfg.f64_list_opt("pipeline", "alpha_lik")?.unwrap_or_else(|| vec![1.0]);
    if alpha_prior
        .iter()
        .chain(&alpha_lik)
        .any(|a| !(a.is_finite() && *a >= 0.0))
    {
        return Err(CliError::Config(
            "power-scaling exponents must be finite and non-negative".into(),
        ));
    }
    let mut plan = plan_header(cfg);
    let post = plan_named(&mut plan, cfg.root_seed(), "posterior", "draws to reweight");
    Ok(Job::new(plan, move || {
        let draws = match approx
            .approximate(model.as_ref(), &y, post)
            .and_then(|d| attach_densities(model.as_ref(), &d, &y))
        {
            Ok(d) => d,
            Err(e) => return Outcome::failed(serde_json::Value::Null, e.into()),
        };
        let dim = draws.dim();
        let mut header = vec!["alpha_prior".to_string(), "alpha_lik".into(), "ess".into()];
        for j in 0..dim {
            header.extend([
                format!("theta[{j}].mean"),
                format!("theta[{j}].q05"),
                format!("theta[{j}].q95"),
            ]);
        }
        let mut table = CsvTable::new("power_scaling", &header.iter().map(String::as_str).collect::<Vec<_>>());
        let mut rows = Vec::new();
        for &ap in &alpha_prior {
            for &al in &alpha_lik {
                let w = match power_scale_weights(&draws, ap, al) {
                    Ok(w) => w,
                    Err(e) => return Outcome::failed(json!({ "power_scaling": rows }), e.into()),
                };
                let means: Vec<f64> = (0..dim).map(|j| w.mean(j)).collect();
                let q05: Vec<f64> = (0..dim).map(|j| w.quantile(j, 0.05)).collect();
                let q95: Vec<f64> = (0..dim).map(|j| w.quantile(j, 0.95)).collect();
                let mut row = vec![num(ap), num(al), num(w.ess)];
                for j in 0..dim {
                    row.extend([num(means[j]), num(q05[j]), num(q95[j])]);
                }
                table.push(row);
                rows.push(json!({
                    "alpha_prior": ap, "alpha_lik": al, "ess": w.ess,
                    "mean": means, "q05": q05, "q95": q95,
                }));
            }
        }
        Outcome::ok(json!({ "draws": draws.len(), "approximator": approx.name(), "power_scaling": rows })).table(table)
    }))
}

pub(crate) fn sensitivity(cfg: &Config) -> Result<Job, CliError> {
    if cfg.section("grid").is_some() {
        sweep(cfg)
    } else {
        power_scaling(cfg)
    }
}
