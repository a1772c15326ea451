//! CSV input and output.
//!
//! Datasets have one row per observation: a `value` column and an optional
//! integer `group` column. Expert statistics have `target,probe,value` rows.

use std::path::Path;

use simflow_core::data::Dataset;

use crate::error::CliError;

/// A table destined for `<out>/<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(format!("{}.csv", self.name));
        let format_err = |e: csv::Error| CliError::Format {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(format_err)?;
        w.write_record(&self.header).map_err(format_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(format_err)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format_error(path, e))
}

fn format_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(|e| format_error(path, e))?.clone();
    let value_col = column(&headers, "value").ok_or_else(|| format_error(path, "missing `value` column"))?;
    let group_col = column(&headers, "group");
    let mut values = Vec::new();
    let mut groups = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_error(path, e))?;
        let at = |msg: String| format_error(path, format!("row {}: {msg}", line + 1));
        let v: f64 = rec[value_col]
            .parse()
            .map_err(|_| at(format!("bad value {:?}", &rec[value_col])))?;
        values.push(v);
        if let Some(g) = group_col {
            groups.push(
                rec[g]
                    .parse::<u32>()
                    .map_err(|_| at(format!("bad group {:?}", &rec[g])))?,
            );
        }
    }
    Ok(Dataset::new(1, values, group_col.map(|_| groups))?)
}

pub fn dataset_table(name: &str, y: &Dataset) -> CsvTable {
    let grouped = y.groups().is_some();
    let mut t = CsvTable::new(name, if grouped { &["value", "group"] } else { &["value"] });
    for i in 0..y.n() {
        let mut row = vec![num(y.row(i)[0])];
        if let Some(g) = y.groups() {
            row.push(g[i].to_string());
        }
        t.push(row);
    }
    t
}

/// Expert statistics on a full target × probe grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertTable {
    pub targets: Vec<String>,
    pub probes: Vec<f64>,
    /// Target-major.
    pub values: Vec<f64>,
}

pub fn read_expert(path: &Path) -> Result<ExpertTable, CliError> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(|e| format_error(path, e))?.clone();
    let cols: Vec<usize> = ["target", "probe", "value"]
        .iter()
        .map(|c| column(&headers, c).ok_or_else(|| format_error(path, format!("missing `{c}` column"))))
        .collect::<Result<_, _>>()?;
    let mut entries: Vec<(String, f64, f64)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_error(path, e))?;
        let num = |c: usize| {
            rec[c]
                .parse::<f64>()
                .map_err(|_| format_error(path, format!("row {}: bad number {:?}", line + 1, &rec[c])))
        };
        entries.push((rec[cols[0]].to_string(), num(cols[1])?, num(cols[2])?));
    }
    let mut targets: Vec<String> = Vec::new();
    let mut probes: Vec<f64> = Vec::new();
    for (t, p, _) in &entries {
        if !targets.contains(t) {
            targets.push(t.clone());
        }
        if !probes.contains(p) {
            probes.push(*p);
        }
    }
    let mut values = Vec::with_capacity(targets.len() * probes.len());
    for t in &targets {
        for p in &probes {
            let mut hits = entries.iter().filter(|(et, ep, _)| et == t && ep == p);
            match (hits.next(), hits.next()) {
                (Some((_, _, v)), None) => values.push(*v),
                (None, _) => return Err(format_error(path, format!("no value for target {t} at probe {p}"))),
                _ => {
                    return Err(format_error(
                        path,
                        format!("duplicate value for target {t} at probe {p}"),
                    ))
                }
            }
        }
    }
    Ok(ExpertTable {
        targets,
        probes,
        values,
    })
}
