//! Machine-readable experiment output: a JSON summary with sorted keys plus
//! CSV tables for grids.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::envelope::EnvelopeSummary;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub observed: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    /// Passes when `observed <= threshold` (and is not NaN).
    pub fn at_most(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            threshold,
            pass: observed <= threshold,
            detail: None,
        }
    }

    /// Passes when `observed >= threshold`.
    pub fn at_least(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            threshold,
            pass: observed >= threshold,
            detail: None,
        }
    }

    /// Exact equality of two counts; `observed` is their difference.
    pub fn exact(name: impl Into<String>, lhs: u128, rhs: u128) -> Self {
        Self {
            name: name.into(),
            observed: lhs.abs_diff(rhs) as f64,
            threshold: 0.0,
            pass: lhs == rhs,
            detail: Some(format!("{lhs} vs {rhs}")),
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            observed: pass as u8 as f64,
            threshold: 1.0,
            pass,
            detail: None,
        }
    }

    pub fn from_envelope(s: &EnvelopeSummary) -> Self {
        Self {
            name: format!("{} log-slope", s.name),
            observed: s.log_slope,
            threshold: s.slope_threshold,
            pass: s.pass,
            detail: Some(format!("max ratio {:.6e} over {} samples", s.max_ratio, s.samples)),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: observed {:.6e}, threshold {:.6e}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.threshold,
            self.detail.as_ref().map(|d| format!(" ({d})")).unwrap_or_default()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Columns a plot of this table would put on the axes.
    pub plot: Option<PlotHint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotHint {
    pub x: String,
    pub y: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn with_plot(mut self, x: &str, y: &[&str], log_x: bool, log_y: bool) -> Self {
        self.plot = Some(PlotHint {
            x: x.into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            log_x,
            log_y,
        });
        self
    }

    pub fn to_csv(&self) -> io::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        String::from_utf8(bytes).map_err(io::Error::other)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckRecord>,
    pub envelopes: Vec<EnvelopeSummary>,
    /// Free-form numeric results keyed by name.
    pub results: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    pub tables: BTreeMap<String, Table>,
}

impl Report {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            tool: "cubex".into(),
            version: TOOL_VERSION.into(),
            config: config.clone(),
            checks: Vec::new(),
            envelopes: Vec::new(),
            results: BTreeMap::new(),
            tables: BTreeMap::new(),
        }
    }

    pub fn check(&mut self, c: CheckRecord) -> &CheckRecord {
        self.checks.push(c);
        self.checks.last().unwrap()
    }

    pub fn envelope(&mut self, s: EnvelopeSummary) {
        self.checks.push(CheckRecord::from_envelope(&s));
        self.envelopes.push(s);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.results.insert(key.to_string(), v);
    }

    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.insert(name.to_string(), t);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Pretty JSON; object keys come out sorted.
    pub fn to_json(&self) -> String {
        // round-tripping through `Value` sorts every object's keys
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json`, one CSV per table and, for plottable tables, a
    /// `<name>.plot.json` stub naming the columns. Returns the paths written.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join("report.json");
        fs::write(&path, self.to_json())?;
        written.push(path);
        for (name, t) in &self.tables {
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, t.to_csv()?)?;
            written.push(path);
            if let Some(hint) = &t.plot {
                let stub = serde_json::json!({
                    "data": format!("{name}.csv"),
                    "x": hint.x,
                    "y": hint.y,
                    "log_x": hint.log_x,
                    "log_y": hint.log_y,
                });
                let path = dir.join(format!("{name}.plot.json"));
                fs::write(&path, serde_json::to_string_pretty(&stub)? + "\n")?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn json_keys_sorted_and_csv_quoted() {
        let cfg = ExperimentConfig::resolve(Command::BoundTable, []).unwrap();
        let mut r = Report::new(&cfg);
        r.check(CheckRecord::at_most("z", 1.0, 2.0));
        r.result("b", 1);
        r.result("a", 2);
        let json = r.to_json();
        let pos = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("checks") < pos("config") && pos("config") < pos("envelopes"));
        assert!(pos("observed") < pos("pass"));

        let mut t = Table::new(["a", "b"]);
        t.push(["x,y", "plain"]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n\"x,y\",plain\n");

        let dir = tempfile::tempdir().unwrap();
        r.table("grid", t.with_plot("a", &["b"], false, true));
        let files = r.write_to(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
    }
}
