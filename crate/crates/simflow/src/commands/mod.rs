//! Subcommands.
//!
//! Each subcommand is split into a validation phase, which reads and checks
//! everything it needs and fails with exit status 2, and a [`Job`] that runs
//! the simulations. A job never fails outright: it returns an [`Outcome`]
//! holding whatever it computed plus the runtime error, if any.

mod abc;
mod calibrate;
mod compare;
mod elicit;
mod predictive;
mod sensitivity;
mod testing;

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use simflow_core::data::Dataset;
use simflow_core::model::Model;
use simflow_core::Seed;

use crate::config::Config;
use crate::csv_io::{self, CsvTable};
use crate::error::CliError;

pub const COMMANDS: [&str; 13] = [
    "sbc",
    "post-sbc",
    "freq-calibrate",
    "power",
    "accuracy",
    "test",
    "ppc",
    "prior-check",
    "elicit",
    "abc",
    "compare",
    "sensitivity",
    "render",
];

#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub tables: Vec<CsvTable>,
    pub messages: Vec<String>,
    pub error: Option<CliError>,
}

impl Outcome {
    pub fn ok(results: Value) -> Self {
        Outcome {
            results,
            ..Outcome::default()
        }
    }

    pub fn failed(results: Value, error: CliError) -> Self {
        Outcome {
            results,
            error: Some(error),
            ..Outcome::default()
        }
    }

    pub fn table(mut self, t: CsvTable) -> Self {
        self.tables.push(t);
        self
    }

    pub fn message(mut self, m: impl Into<String>) -> Self {
        self.messages.push(m.into());
        self
    }
}

type RunFn = Box<dyn FnOnce() -> Outcome + Send>;

/// A validated run, ready to simulate.
pub struct Job {
    pub seed_plan: Vec<String>,
    run: RunFn,
}

impl Job {
    pub fn new(seed_plan: Vec<String>, run: impl FnOnce() -> Outcome + Send + 'static) -> Self {
        Job {
            seed_plan,
            run: Box::new(run),
        }
    }

    pub fn run(self) -> Outcome {
        (self.run)()
    }
}

/// Validates `cfg` for `command` and returns the job to run.
pub fn prepare(command: &str, cfg: &Config) -> Result<Job, CliError> {
    match command {
        "sbc" => calibrate::sbc(cfg),
        "post-sbc" => calibrate::post_sbc(cfg),
        "freq-calibrate" => calibrate::frequentist(cfg),
        "power" => calibrate::power(cfg),
        "accuracy" => calibrate::accuracy(cfg),
        "test" => testing::test(cfg),
        "ppc" => predictive::ppc(cfg),
        "prior-check" => predictive::prior_check(cfg),
        "elicit" => elicit::elicit(cfg),
        "abc" => abc::abc(cfg),
        "compare" => compare::compare(cfg),
        "sensitivity" => sensitivity::sensitivity(cfg),
        other => Err(CliError::Config(format!("unknown command {other:?}"))),
    }
}

pub(crate) fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result types serialize")
}

/// Turns a core result into an outcome.
pub(crate) fn settle<T>(r: simflow_core::Result<T>, f: impl FnOnce(T) -> Outcome) -> Outcome {
    match r {
        Ok(x) => f(x),
        Err(e) => Outcome::failed(Value::Null, e.into()),
    }
}

pub(crate) fn plan_header(cfg: &Config) -> Vec<String> {
    let source = serde_json::to_value(cfg.seed.source).unwrap_or(Value::Null);
    vec![format!(
        "root seed {} ({})",
        cfg.seed.root,
        source.as_str().unwrap_or("?")
    )]
}

/// Describes an indexed family of streams and lists its first members.
pub(crate) fn plan_indexed(lines: &mut Vec<String>, label: &str, base: Seed, n: usize, roles: &str) {
    lines.push(format!(
        "{label}: {n} tasks, task i uses child(i) of {}; {roles}",
        base.0
    ));
    for i in 0..n.min(3) {
        lines.push(format!("  task {i}: seed {}", base.child(i as u64).0));
    }
    if n > 3 {
        lines.push(format!("  task {}: seed {}", n - 1, base.child(n as u64 - 1).0));
    }
}

pub(crate) fn plan_named(lines: &mut Vec<String>, base: Seed, name: &str, role: &str) -> Seed {
    let s = base.named(name);
    lines.push(format!("named stream {name:?}: seed {} ({role})", s.0));
    s
}

pub(crate) fn require_positive(what: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        Err(CliError::Config(format!("{what} must be positive")))
    } else {
        Ok(v)
    }
}

pub(crate) fn alpha(cfg: &Config, default: f64) -> Result<f64, CliError> {
    let a = cfg.f64_or("pipeline", "alpha", default)?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(CliError::Config(format!("pipeline.alpha must be in (0, 1), got {a}")))
    }
}

/// Observed data from `pipeline.data`, checked against the model's layout.
pub(crate) fn observed_data(cfg: &Config, model: &dyn Model) -> Result<Dataset, CliError> {
    let path = cfg
        .path_opt("pipeline", "data")?
        .ok_or_else(|| CliError::Config("missing required key pipeline.data (or --data)".into()))?;
    load_data(&path, model)
}

pub(crate) fn load_data(path: &Path, model: &dyn Model) -> Result<Dataset, CliError> {
    let y = csv_io::read_dataset(path)?;
    let shape = model.data_shape();
    if shape.groups > 1 && y.groups().is_none() {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!("{} needs a `group` column", model.name()),
        });
    }
    if y.is_empty() {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "no observations".into(),
        });
    }
    Ok(y)
}

pub(crate) fn require_approximator(cfg: &Config) -> Result<(), CliError> {
    cfg.str_req("approximator", "name").map(|_| ())
}
