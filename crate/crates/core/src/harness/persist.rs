use std::fs;
use std::path::Path;

use serde::Serialize;

use super::experiment::{ExperimentResult, ExperimentSpec, SPEC_VERSION};
use crate::error::{Error, Result};

fn check_version(text: &str) -> Result<()> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value.get("spec_version").and_then(serde_json::Value::as_u64);
    match found {
        Some(v) if v == u64::from(SPEC_VERSION) => Ok(()),
        Some(v) => Err(Error::SchemaVersion {
            found: u32::try_from(v).unwrap_or(u32::MAX),
            expected: SPEC_VERSION,
        }),
        None => Err(Error::InvalidArgument("missing spec_version".into())),
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        check_version(text)?;
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl ExperimentResult {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        check_version(text)?;
        Ok(serde_json::from_str(text)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// One row per cell. Cells without statistics leave the numeric columns
    /// empty; `bound` is the first attached bound, if any.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            let q = c.queries.as_ref();
            w.serialize(CsvRow {
                strategy: c.strategy.name(),
                family: c.family.to_string(),
                n: c.n,
                k: c.k,
                theta_true: c.theta_true,
                theta_assumed: c.theta_assumed,
                episodes: c.episodes,
                mean: q.map(|s| s.mean),
                median: q.map(|s| s.median),
                p95: q.map(|s| s.p95),
                stderr: q.map(|s| s.stderr),
                bound: c.bounds.first().map(|b| b.value),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(fs::File::create(path)?)
    }
}

#[derive(Serialize)]
struct CsvRow {
    strategy: &'static str,
    family: String,
    n: usize,
    k: usize,
    theta_true: f64,
    theta_assumed: f64,
    episodes: usize,
    mean: Option<f64>,
    median: Option<f64>,
    p95: Option<f64>,
    stderr: Option<f64>,
    bound: Option<f64>,
}
