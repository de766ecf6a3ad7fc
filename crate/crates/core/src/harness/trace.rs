use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Checkpoint metrics of one run, written as
///
/// ```text
/// # config_hash=...
/// # seed=...
/// k,metric,value
/// 1,q_error,12.5
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    metadata: Vec<(String, String)>,
    rows: Vec<(usize, String, f64)>,
    last_step: BTreeMap<String, usize>,
}

impl RunTrace {
    pub fn new(metadata: Vec<(String, String)>) -> Self {
        Self {
            metadata,
            rows: Vec::new(),
            last_step: BTreeMap::new(),
        }
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn rows(&self) -> &[(usize, String, f64)] {
        &self.rows
    }

    /// Appends a row; values must be finite and steps strictly increasing
    /// per metric.
    pub fn push(&mut self, k: usize, metric: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NumericalFailure {
                message: format!("metric {metric} is not finite at step {k}"),
                partial: value,
            });
        }
        if let Some(&prev) = self.last_step.get(metric) {
            if k <= prev {
                return Err(Error::InternalConsistency(format!(
                    "metric {metric}: step {k} does not follow {prev}"
                )));
            }
        }
        self.last_step.insert(metric.to_string(), k);
        self.rows.push((k, metric.to_string(), value));
        Ok(())
    }

    /// `(k, value)` pairs of one metric.
    pub fn series(&self, metric: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|(_, m, _)| m == metric)
            .map(|(k, _, v)| (*k, *v))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        for (key, value) in &self.metadata {
            writeln!(out, "# {key}={value}").expect("in-memory write");
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["k", "metric", "value"]).expect("in-memory write");
            for (k, m, v) in &self.rows {
                w.write_record([k.to_string(), m.clone(), v.to_string()])
                    .expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        String::from_utf8(out).expect("utf-8 output")
    }

    /// Parses a trace written by [`RunTrace::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("trace: {m}"));
        let metadata = text
            .lines()
            .filter_map(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let mut trace = Self::new(metadata);
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        for record in reader.records() {
            let r = record.map_err(|e| bad(e.to_string()))?;
            let k = r[0].parse().map_err(|e| bad(format!("{e}")))?;
            let v = r[2].parse().map_err(|e| bad(format!("{e}")))?;
            trace.push(k, &r[1], v)?;
        }
        Ok(trace)
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        let name = path
            .file_name()
            .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
        let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
        std::fs::write(&tmp, self.to_csv())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}
