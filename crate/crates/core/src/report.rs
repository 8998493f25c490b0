//! Structured diagnostic reports shared by every module.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{io, Result};

/// One named pass/fail verdict with the observed quantity and the limit it
/// was compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub limit: f64,
    #[serde(default)]
    pub detail: String,
}

/// Result record of a diagnostic run.
///
/// All stored floats are finite; non-finite values are clamped to
/// `±f64::MAX` and flagged in `notes` so that serialization never loses
/// information silently.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub counts: BTreeMap<String, u64>,
    #[serde(default)]
    pub series: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(crate::Error::param(format!("unknown format `{other}`"))),
        }
    }
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Report {
            name: name.into(),
            ..Default::default()
        }
    }

    fn finite(&mut self, key: &str, value: f64) -> f64 {
        if value.is_finite() {
            value
        } else {
            self.notes.push(format!("{key} is non-finite ({value})"));
            if value.is_nan() {
                0.0
            } else {
                value.signum() * f64::MAX
            }
        }
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        observed: f64,
        limit: f64,
        detail: impl Into<String>,
    ) -> &mut Self {
        let name = name.into();
        let observed = self.finite(&name, observed);
        let limit = self.finite(&format!("{name}.limit"), limit);
        self.checks.push(Check {
            name,
            passed,
            observed,
            limit,
            detail: detail.into(),
        });
        self
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        let key = key.into();
        let value = self.finite(&key, value);
        self.metrics.insert(key, value);
        self
    }

    pub fn count(&mut self, key: impl Into<String>, value: u64) -> &mut Self {
        self.counts.insert(key.into(), value);
        self
    }

    pub fn series(&mut self, key: impl Into<String>, values: Vec<f64>) -> &mut Self {
        let key = key.into();
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| self.finite(&format!("{key}[{i}]"), v))
            .collect();
        self.series.insert(key, values);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    /// Folds another report's checks into this one, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: &Report) -> &mut Self {
        for c in &other.checks {
            let mut c = c.clone();
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
        for (k, v) in &other.metrics {
            self.metrics.insert(format!("{prefix}.{k}"), *v);
        }
        for (k, v) in &other.counts {
            self.counts.insert(format!("{prefix}.{k}"), *v);
        }
        for n in &other.notes {
            self.notes.push(format!("{prefix}: {n}"));
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        io::canonical_json(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Parse(e.to_string()))
    }

    /// Flat CSV view: one row per check, then one row per metric.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "name", "passed", "value", "limit"])
            .expect("in-memory csv");
        for c in &self.checks {
            w.write_record([
                "check",
                &c.name,
                if c.passed { "true" } else { "false" },
                &io::fmt_f64(c.observed),
                &io::fmt_f64(c.limit),
            ])
            .expect("in-memory csv");
        }
        for (k, v) in &self.metrics {
            w.write_record(["metric", k, "", &io::fmt_f64(*v), ""])
                .expect("in-memory csv");
        }
        for (k, v) in &self.counts {
            w.write_record(["count", k, "", &v.to_string(), ""])
                .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// Writes the report to `path` in the requested format.
    pub fn emit(&self, path: &Path, format: Format) -> Result<()> {
        let body = match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        };
        io::write_text(path, &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("sample");
        r.check("a", true, 0.1, 0.2, "")
            .metric("z", 1.0 / 3.0)
            .metric("b", 2.0)
            .count("n", 4)
            .series("s", vec![1.0, 0.5]);
        r
    }

    #[test]
    fn json_is_byte_stable_and_round_trips() {
        let r = sample();
        assert_eq!(r.to_json(), sample().to_json());
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn non_finite_values_are_clamped_and_noted() {
        let mut r = Report::new("x");
        r.metric("tau", f64::INFINITY);
        assert_eq!(r.metrics["tau"], f64::MAX);
        assert_eq!(r.notes.len(), 1);
        assert!(Report::from_json(&r.to_json()).is_ok());
    }

    #[test]
    fn csv_has_a_row_per_entry() {
        let csv = sample().to_csv();
        assert_eq!(csv.lines().count(), 1 + 1 + 2 + 1);
    }
}
