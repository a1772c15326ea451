//! Argument parsing and the run driver.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use toml::Value;

use crate::commands::{self, Outcome};
use crate::config::{Config, ConfigBuilder, SEED_ENV};
use crate::error::{CliError, Exit};
use crate::report::{ErrorInfo, RunReport, Status, Timing, SCHEMA_VERSION};
use crate::svg;

#[derive(Debug, Parser)]
#[command(
    name = "simflow",
    version,
    about = "Simulation-based calibration, testing and model checking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulation-based calibration of an approximator against the prior.
    Sbc,
    /// Calibration conditional on observed data.
    PostSbc,
    /// Calibration of a sampling-distribution approximation at fixed θ.
    FreqCalibrate,
    /// Simulated power of a test.
    Power,
    /// Expected loss of an estimator.
    Accuracy,
    /// Monte Carlo hypothesis test of observed data.
    Test,
    /// Posterior or frequentist predictive check.
    Ppc,
    /// Prior pushforward check against a plausible region.
    PriorCheck,
    /// Fit prior hyperparameters to expert statistics.
    Elicit,
    /// Rejection ABC on observed data.
    Abc,
    /// Evidence and posterior model probabilities.
    Compare,
    /// Hyperparameter sweep or power-scaling sensitivity.
    Sensitivity,
    /// Redraw figures from an existing report.
    Render,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sbc => "sbc",
            Command::PostSbc => "post-sbc",
            Command::FreqCalibrate => "freq-calibrate",
            Command::Power => "power",
            Command::Accuracy => "accuracy",
            Command::Test => "test",
            Command::Ppc => "ppc",
            Command::PriorCheck => "prior-check",
            Command::Elicit => "elicit",
            Command::Abc => "abc",
            Command::Compare => "compare",
            Command::Sensitivity => "sensitivity",
            Command::Render => "render",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub approximator: Option<String>,
    /// Number of outer simulations.
    #[arg(long = "S", global = true)]
    pub s: Option<usize>,
    /// Draws per approximator call.
    #[arg(long = "M", global = true)]
    pub m: Option<usize>,
    /// Augmented-posterior draws in posterior SBC.
    #[arg(long = "D", global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Root seed; SIMFLOW_SEED is used when neither flag nor config sets one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Validate and print the seed plan without simulating.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Override any key: --set section.key=value (repeatable).
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    /// Observed data CSV.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Expert statistics CSV.
    #[arg(long, global = true)]
    pub expert: Option<PathBuf>,
    /// Report to render.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

fn path_value(p: &Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

/// Merges the config file, environment and flags.
pub fn resolve_config(g: &GlobalArgs, env_seed: Option<&str>) -> Result<Config, CliError> {
    let mut b = ConfigBuilder::from_file(g.config.as_deref())?;
    let named: [(&str, &str, Option<Value>); 11] = [
        ("model", "name", g.model.clone().map(Value::String)),
        ("approximator", "name", g.approximator.clone().map(Value::String)),
        ("pipeline", "S", g.s.map(|v| Value::Integer(v as i64))),
        ("pipeline", "M", g.m.map(|v| Value::Integer(v as i64))),
        ("pipeline", "D", g.d.map(|v| Value::Integer(v as i64))),
        ("pipeline", "alpha", g.alpha.map(Value::Float)),
        (
            "pipeline",
            "seed",
            g.seed
                .map(|v| i64::try_from(v).map_or_else(|_| Value::String(v.to_string()), Value::Integer)),
        ),
        ("output", "dir", g.out.as_deref().map(path_value)),
        ("pipeline", "data", g.data.as_deref().map(path_value)),
        ("pipeline", "expert", g.expert.as_deref().map(path_value)),
        ("pipeline", "input", g.input.as_deref().map(path_value)),
    ];
    for (section, key, value) in named {
        if let Some(v) = value {
            b.set(section, key, v)?;
        }
    }
    for spec in &g.set {
        b.assign(spec)?;
    }
    b.build(env_seed)
}

const FORMATS: [&str; 3] = ["json", "csv", "svg"];

fn formats(cfg: &Config) -> Result<Vec<String>, CliError> {
    let f = cfg
        .str_list_opt("output", "formats")?
        .unwrap_or_else(|| FORMATS.iter().map(|s| s.to_string()).collect());
    if let Some(bad) = f.iter().find(|x| !FORMATS.contains(&x.as_str())) {
        return Err(CliError::Config(format!(
            "unknown output format {bad:?}; expected json, csv or svg"
        )));
    }
    Ok(f)
}

fn out_dir(cfg: &Config) -> Result<PathBuf, CliError> {
    Ok(cfg
        .path_opt("output", "dir")?
        .unwrap_or_else(|| PathBuf::from("simflow-out")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn report_error(e: &CliError, phase: Exit) -> Exit {
    eprintln!("simflow: error: {e}");
    phase
}

fn render(cfg: &Config, dry_run: bool) -> Exit {
    let input = match cfg.path_opt("pipeline", "input") {
        Ok(Some(p)) => p,
        Ok(None) => {
            return report_error(
                &CliError::Config("render needs --input <report.json>".into()),
                Exit::Validation,
            )
        }
        Err(e) => return report_error(&e, Exit::Validation),
    };
    let report = match RunReport::read(&input) {
        Ok(r) => r,
        Err(e) => return report_error(&e, Exit::Validation),
    };
    let dir = match out_dir(cfg) {
        Ok(d) => d,
        Err(e) => return report_error(&e, Exit::Validation),
    };
    if dry_run {
        let (figs, _) = svg::figures(&report);
        for (name, _) in figs {
            println!("{}", dir.join(name).display());
        }
        return Exit::Ok;
    }
    match create_dir(&dir).and_then(|_| svg::render(&report, &dir)) {
        Ok((_, warnings)) => {
            for w in warnings {
                log::warn!("{w}");
            }
            Exit::Ok
        }
        Err(e) => report_error(&e, Exit::Runtime),
    }
}

fn write_outputs(report: &RunReport, outcome: &Outcome, dir: &Path, formats: &[String]) -> Result<(), CliError> {
    report.write(dir)?;
    if formats.iter().any(|f| f == "csv") {
        for t in &outcome.tables {
            t.write(dir)?;
        }
    }
    if formats.iter().any(|f| f == "svg") {
        let (_, warnings) = svg::render(report, dir)?;
        for w in warnings {
            log::warn!("{w}");
        }
    }
    Ok(())
}

/// Validates, runs and writes one command. Returns the exit status.
pub fn execute(command: Command, g: &GlobalArgs) -> Exit {
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = match resolve_config(g, env_seed.as_deref()) {
        Ok(c) => c,
        Err(e) => return report_error(&e, Exit::Validation),
    };
    if command == Command::Render {
        return render(&cfg, g.dry_run);
    }
    let (job, dir, formats) =
        match commands::prepare(command.name(), &cfg).and_then(|job| Ok((job, out_dir(&cfg)?, formats(&cfg)?))) {
            Ok(x) => x,
            Err(e) => return report_error(&e, Exit::Validation),
        };
    if g.dry_run {
        println!("{}", job.seed_plan.join("\n"));
        return Exit::Ok;
    }
    if let Err(e) = create_dir(&dir) {
        return report_error(&e, Exit::Runtime);
    }
    let start = Instant::now();
    let outcome = job.run();
    let wall_seconds = start.elapsed().as_secs_f64();
    for m in &outcome.messages {
        log::warn!("{m}");
    }
    let report = RunReport {
        schema_version: SCHEMA_VERSION.into(),
        command: command.name().into(),
        config: serde_json::to_value(cfg.table()).expect("TOML tables serialize"),
        seed: cfg.seed.into(),
        status: if outcome.error.is_some() {
            Status::Error
        } else {
            Status::Ok
        },
        error: outcome.error.as_ref().map(|e| ErrorInfo {
            kind: e.kind().into(),
            message: e.to_string(),
        }),
        messages: outcome.messages.clone(),
        results: outcome.results.clone(),
        timing: Timing { wall_seconds },
    };
    if let Err(e) = write_outputs(&report, &outcome, &dir, &formats) {
        return report_error(&e, Exit::Runtime);
    }
    match &outcome.error {
        Some(e) => report_error(e, Exit::Runtime),
        None => Exit::Ok,
    }
}

/// Runs `execute` on a pool capped at `--threads` workers.
pub fn run(cli: &Cli) -> Exit {
    match cli.global.threads {
        None => execute(cli.command, &cli.global),
        Some(0) => report_error(&CliError::Config("--threads must be positive".into()), Exit::Validation),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command, &cli.global)),
            Err(e) => report_error(&CliError::Config(format!("thread pool: {e}")), Exit::Runtime),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_file_and_set_overrides_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "[model]\nname = \"beta-binomial\"\n[pipeline]\nS = 10\nseed = 3\n",
        )
        .unwrap();
        let g = GlobalArgs {
            config: Some(path),
            model: Some("normal-normal".into()),
            s: Some(20),
            set: vec!["pipeline.S=30".into()],
            ..GlobalArgs::default()
        };
        let cfg = resolve_config(&g, Some("9")).unwrap();
        assert_eq!(cfg.str_req("model", "name").unwrap(), "normal-normal");
        assert_eq!(cfg.usize_or("pipeline", "S", 0).unwrap(), 30);
        assert_eq!(cfg.seed.root, 3);
    }

    #[test]
    fn every_command_has_a_name_in_the_table() {
        for name in commands::COMMANDS {
            assert!(Cli::try_parse_from(["simflow", name]).is_ok(), "{name}");
        }
    }
}
