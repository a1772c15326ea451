//! Run configuration: a TOML file with `[model]`, `[approximator]`,
//! `[pipeline]` and `[output]` sections, overridden by command-line flags.
//!
//! Precedence, lowest first: config file, `SIMFLOW_SEED` (seed only, and only
//! when nothing else sets it), named flags, `--set section.key=value`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use simflow_core::Seed;
use toml::{Table, Value};

use crate::error::CliError;

pub const SEED_ENV: &str = "SIMFLOW_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Config,
    Flag,
    Env,
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedProvenance {
    pub root: u64,
    pub source: SeedSource,
}

#[derive(Debug, Clone)]
pub struct Config {
    table: Table,
    pub seed: SeedProvenance,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse::<Table>()
        .map_err(|e| cfg_err(format!("{}: {e}", path.display())))
}

/// Parses the right-hand side of `--set`: anything TOML accepts as a value,
/// otherwise a bare string.
pub fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Accumulates overrides on top of a base table and resolves the root seed.
#[derive(Debug, Default)]
pub struct ConfigBuilder {
    table: Table,
    seed_from_file: bool,
    seed_from_flag: bool,
}

impl ConfigBuilder {
    pub fn from_file(path: Option<&Path>) -> Result<Self, CliError> {
        let table = match path {
            Some(p) => read_table(p)?,
            None => Table::new(),
        };
        let seed_from_file = lookup(&table, "pipeline", "seed").is_some();
        Ok(ConfigBuilder {
            table,
            seed_from_file,
            seed_from_flag: false,
        })
    }

    pub fn set(&mut self, section: &str, key: &str, value: Value) -> Result<(), CliError> {
        if section == "pipeline" && key == "seed" {
            self.seed_from_flag = true;
        }
        let entry = self
            .table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        match entry {
            Value::Table(t) => {
                t.insert(key.to_string(), value);
                Ok(())
            }
            _ => Err(cfg_err(format!("[{section}] is not a table"))),
        }
    }

    /// Applies one `section.key=value` assignment.
    pub fn assign(&mut self, spec: &str) -> Result<(), CliError> {
        let (path, raw) = spec
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("--set expects section.key=value, got {spec:?}")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| cfg_err(format!("--set key {path:?} lacks a section")))?;
        self.set(section, key, parse_value(raw.trim()))
    }

    pub fn build(mut self, env_seed: Option<&str>) -> Result<Config, CliError> {
        let source = if self.seed_from_flag {
            SeedSource::Flag
        } else if self.seed_from_file {
            SeedSource::Config
        } else if env_seed.is_some() {
            SeedSource::Env
        } else {
            SeedSource::Default
        };
        let root = match source {
            SeedSource::Env => parse_seed(&Value::String(env_seed.unwrap_or_default().trim().into()))
                .map_err(|e| cfg_err(format!("{SEED_ENV}: {e}")))?,
            SeedSource::Default => 0,
            _ => parse_seed(lookup(&self.table, "pipeline", "seed").expect("seed key present")).map_err(cfg_err)?,
        };
        // The echo always carries the seed actually used.
        let echoed = i64::try_from(root).map_or_else(|_| Value::String(root.to_string()), Value::Integer);
        self.set("pipeline", "seed", echoed)?;
        Ok(Config {
            table: self.table,
            seed: SeedProvenance { root, source },
        })
    }
}

fn parse_seed(v: &Value) -> Result<u64, String> {
    match v {
        Value::Integer(i) => u64::try_from(*i).map_err(|_| format!("seed must be non-negative, got {i}")),
        Value::String(s) => s
            .parse::<u64>()
            .map_err(|_| format!("seed must be an unsigned integer, got {s:?}")),
        other => Err(format!("seed must be an unsigned integer, got {other}")),
    }
}

fn lookup<'a>(table: &'a Table, section: &str, key: &str) -> Option<&'a Value> {
    table.get(section)?.as_table()?.get(key)
}

impl Config {
    pub fn root_seed(&self) -> Seed {
        Seed(self.seed.root)
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    /// Copy with one `section.key` replaced; the seed stays as resolved.
    pub fn with_override(&self, path: &str, value: Value) -> Result<Config, CliError> {
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| cfg_err(format!("override key {path:?} lacks a section")))?;
        if section == "pipeline" && key == "seed" {
            return Err(cfg_err("the seed cannot be varied inside one run"));
        }
        let mut table = self.table.clone();
        match table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
        {
            Value::Table(t) => {
                t.insert(key.to_string(), value);
            }
            _ => return Err(cfg_err(format!("[{section}] is not a table"))),
        }
        Ok(Config { table, seed: self.seed })
    }

    pub fn section(&self, name: &str) -> Option<&Table> {
        self.table.get(name).and_then(Value::as_table)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Value> {
        lookup(&self.table, section, key)
    }

    pub fn has(&self, section: &str, key: &str) -> bool {
        self.get(section, key).is_some()
    }

    pub fn str_opt(&self, section: &str, key: &str) -> Result<Option<&str>, CliError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(cfg_err(format!("{section}.{key} must be a string, got {other}"))),
        }
    }

    pub fn str_req(&self, section: &str, key: &str) -> Result<&str, CliError> {
        self.str_opt(section, key)?
            .ok_or_else(|| cfg_err(format!("missing required key {section}.{key}")))
    }

    pub fn f64_opt(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        self.get(section, key)
            .map(|v| as_f64(v).ok_or_else(|| cfg_err(format!("{section}.{key} must be a number, got {v}"))))
            .transpose()
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(section, key)?.unwrap_or(default))
    }

    pub fn usize_opt(&self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        self.get(section, key)
            .map(|v| {
                as_usize(v).ok_or_else(|| cfg_err(format!("{section}.{key} must be a non-negative integer, got {v}")))
            })
            .transpose()
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.usize_opt(section, key)?.unwrap_or(default))
    }

    /// A number or an array of numbers.
    pub fn f64_list_opt(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let bad = |v: &Value| cfg_err(format!("{section}.{key} must be a number or array of numbers, got {v}"));
        match self.get(section, key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| as_f64(v).ok_or_else(|| bad(v)))
                .collect::<Result<_, _>>()
                .map(Some),
            Some(v) => as_f64(v).map(|x| Some(vec![x])).ok_or_else(|| bad(v)),
        }
    }

    /// A string or an array of strings.
    pub fn str_list_opt(&self, section: &str, key: &str) -> Result<Option<Vec<String>>, CliError> {
        let bad = |v: &Value| cfg_err(format!("{section}.{key} must be a string or array of strings, got {v}"));
        match self.get(section, key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(vec![s.clone()])),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| bad(v)))
                .collect::<Result<_, _>>()
                .map(Some),
            Some(v) => Err(bad(v)),
        }
    }

    pub fn path_opt(&self, section: &str, key: &str) -> Result<Option<PathBuf>, CliError> {
        Ok(self.str_opt(section, key)?.map(PathBuf::from))
    }

    /// Array of tables such as `[[models]]`.
    pub fn table_list(&self, key: &str) -> Result<Vec<Table>, CliError> {
        match self.table.get(key) {
            None => Ok(Vec::new()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_table()
                        .cloned()
                        .ok_or_else(|| cfg_err(format!("every [[{key}]] entry must be a table")))
                })
                .collect(),
            Some(_) => Err(cfg_err(format!("{key} must be an array of tables"))),
        }
    }
}

pub fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

pub fn as_usize(v: &Value) -> Option<usize> {
    match v {
        Value::Integer(i) => usize::try_from(*i).ok(),
        Value::Float(x) if *x >= 0.0 && x.fract() == 0.0 && *x < 9.0e15 => Some(*x as usize),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_values_are_typed() {
        assert_eq!(parse_value("3"), Value::Integer(3));
        assert_eq!(parse_value("0.5"), Value::Float(0.5));
        assert_eq!(
            parse_value("[1, 2]"),
            Value::Array(vec![Value::Integer(1), Value::Integer(2)])
        );
        assert_eq!(parse_value("exact"), Value::String("exact".into()));
    }

    #[test]
    fn seed_precedence() {
        let mut b = ConfigBuilder::default();
        b.set("pipeline", "S", Value::Integer(10)).unwrap();
        let c = b.build(Some("17")).unwrap();
        assert_eq!(
            c.seed,
            SeedProvenance {
                root: 17,
                source: SeedSource::Env
            }
        );

        let mut b = ConfigBuilder::default();
        b.assign("pipeline.seed=5").unwrap();
        let c = b.build(Some("17")).unwrap();
        assert_eq!(
            c.seed,
            SeedProvenance {
                root: 5,
                source: SeedSource::Flag
            }
        );

        let c = ConfigBuilder::default().build(None).unwrap();
        assert_eq!(c.seed.source, SeedSource::Default);
        assert_eq!(c.get("pipeline", "seed"), Some(&Value::Integer(0)));
    }

    #[test]
    fn bad_env_seed_is_a_config_error() {
        assert!(ConfigBuilder::default().build(Some("minus one")).is_err());
    }

    #[test]
    fn integral_floats_count_as_sizes() {
        assert_eq!(as_usize(&Value::Float(1e4)), Some(10_000));
        assert_eq!(as_usize(&Value::Float(2.5)), None);
        assert_eq!(as_usize(&Value::Integer(-1)), None);
    }
}
