//! Run reports.
//!
//! Reports are written through [`serde_json::Value`], whose maps keep keys
//! sorted, with every float printed as `{:.16e}` (17 significant digits,
//! enough to round-trip any `f64`). Non-finite floats become `null`. The
//! `timing` key sorts last, so dropping it leaves a byte-stable prefix.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::config::SeedProvenance;
use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub root: u64,
    pub source: String,
}

impl From<SeedProvenance> for SeedInfo {
    fn from(p: SeedProvenance) -> Self {
        let source = serde_json::to_value(p.source)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        SeedInfo { root: p.root, source }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub command: String,
    /// Fully resolved configuration after all overrides.
    pub config: Value,
    pub seed: SeedInfo,
    pub status: Status,
    pub error: Option<ErrorInfo>,
    pub messages: Vec<String>,
    /// Command-specific payload; on failure, whatever was computed.
    pub results: Value,
    pub timing: Timing,
}

/// Pretty printing with fixed-width scientific floats.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value in the report format.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    // Going through Value sorts every map.
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloat(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_json_string(self).expect("report values are always serializable")
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(REPORT_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<RunReport, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Report text with the `timing` member removed, for determinism checks.
pub fn strip_timing(json: &str) -> String {
    match json.find("\n  \"timing\"") {
        Some(i) => json[..i].trim_end_matches(',').to_string(),
        None => json.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            schema_version: SCHEMA_VERSION.into(),
            command: "sbc".into(),
            config: serde_json::json!({"pipeline": {"S": 10, "alpha": 0.1}, "model": {"name": "x"}}),
            seed: SeedInfo {
                root: u64::MAX,
                source: "flag".into(),
            },
            status: Status::Ok,
            error: None,
            messages: vec![],
            results: serde_json::json!({"p": [0.1, 1.0 / 3.0, 2.0e-300, -0.0]}),
            timing: Timing { wall_seconds: 1.5 },
        }
    }

    #[test]
    fn round_trips() {
        let r = sample();
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let text = to_json_string(&serde_json::json!({"x": 0.1, "y": 3})).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"y\": 3"));
    }

    #[test]
    fn timing_is_last_and_strippable() {
        let r = sample();
        let mut other = r.clone();
        other.timing.wall_seconds = 99.0;
        assert_ne!(r.to_json(), other.to_json());
        assert_eq!(strip_timing(&r.to_json()), strip_timing(&other.to_json()));
        assert!(!strip_timing(&r.to_json()).contains("wall_seconds"));
    }
}
