//! What a run leaves on disk: `record.json` (everything, including wall
//! clock), `aggregate.json` (deterministic subset) and one CSV per table.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, HarnessResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunVerdict {
    Pass,
    Fail,
}

impl RunVerdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            RunVerdict::Pass
        } else {
            RunVerdict::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            RunVerdict::Pass => 0,
            RunVerdict::Fail => 2,
        }
    }
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed floats of one column; blanks and non-numbers are skipped.
    pub fn floats(&self, name: &str) -> Vec<Option<f64>> {
        match self.column(name) {
            Some(c) => self.rows.iter().map(|r| r.get(c).and_then(|v| v.parse().ok())).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv(&self) -> HarnessResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
    }
}

/// Shortest round-trip text of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(default)]
    pub verdict: Option<RunVerdict>,
    #[serde(default)]
    pub stats: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentRecord {
    #[serde(default)]
    pub tool_version: String,
    #[serde(default)]
    pub master_seed: u64,
    /// The config as run, with every `"auto"` resolved.
    #[serde(default)]
    pub config: Option<ExperimentConfig>,
    #[serde(default)]
    pub wall_clock_secs: f64,
    #[serde(default)]
    pub aggregate: Aggregate,
    #[serde(default)]
    pub tables: Vec<Table>,
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    tool_version: &'a str,
    master_seed: u64,
    config: &'a Option<ExperimentConfig>,
    aggregate: &'a Aggregate,
}

impl ExperimentRecord {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Everything except the wall clock.
    pub fn aggregate_json(&self) -> String {
        let f = AggregateFile {
            tool_version: &self.tool_version,
            master_seed: self.master_seed,
            config: &self.config,
            aggregate: &self.aggregate,
        };
        serde_json::to_string_pretty(&f).expect("aggregate serializes") + "\n"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes") + "\n"
    }

    /// Writes the record, the aggregate and the CSV tables into `dir`.
    /// Returns the paths written.
    pub fn write(&self, dir: &Path) -> HarnessResult<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let mut out = Vec::new();
        let mut put = |name: String, bytes: &[u8]| -> HarnessResult<()> {
            let p = dir.join(name);
            fs::write(&p, bytes).map_err(|e| HarnessError::io(&p, e))?;
            out.push(p);
            Ok(())
        };
        put("record.json".into(), self.to_json().as_bytes())?;
        put("aggregate.json".into(), self.aggregate_json().as_bytes())?;
        for t in &self.tables {
            put(format!("{}.csv", t.name), &t.to_csv()?)?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let unreadable = |reason: String| HarnessError::RecordUnreadable { path: path.to_path_buf(), reason };
        let text = fs::read_to_string(path).map_err(|e| unreadable(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| unreadable(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_lf() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.1)]);
        t.push(vec!["x,y".into(), fmt_opt(None)]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "a,b\n1,0.1\n\"x,y\",\n");
    }

    #[test]
    fn floats_skip_blanks() {
        let mut t = Table::new("t", &["v"]);
        t.push(vec!["2.5".into()]);
        t.push(vec!["".into()]);
        assert_eq!(t.floats("v"), vec![Some(2.5), None]);
        assert!(t.floats("w").is_empty());
    }

    #[test]
    fn empty_object_is_an_empty_record() {
        let r: ExperimentRecord = serde_json::from_str("{}").unwrap();
        assert!(r.tables.is_empty() && r.config.is_none());
    }

    #[test]
    fn awkward_floats_survive_json() {
        let mut r = ExperimentRecord::default();
        for (i, v) in [0.1 + 0.2, 1e-300, 5e-324, 1.0 / 3.0, 123456789.12345679].into_iter().enumerate() {
            r.aggregate.stats.insert(format!("v{i}"), v);
        }
        let back: ExperimentRecord = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
