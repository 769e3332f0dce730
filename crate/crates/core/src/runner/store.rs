use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

/// A per-sample failure. Recorded, never fatal to the run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub theta_id: u64,
    pub task: String,
    pub message: String,
}

/// CSV tables plus a JSON manifest in one output directory.
///
/// Tables are written as soon as they are complete; the manifest and
/// `errors.csv` when the store is finished. Only the manifest carries
/// timestamps.
pub struct ResultStore {
    dir: PathBuf,
    experiment: String,
    config: Value,
    tables: Vec<String>,
    failures: Vec<Failure>,
    summary: serde_json::Map<String, Value>,
    started: SystemTime,
    clock: Instant,
}

fn unix_secs(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl ResultStore {
    pub fn create(dir: &Path, experiment: &str, config: Value) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ResultStore {
            dir: dir.to_path_buf(),
            experiment: experiment.to_string(),
            config,
            tables: Vec::new(),
            failures: Vec::new(),
            summary: serde_json::Map::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_table<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        if !self.tables.iter().any(|t| t == name) {
            self.tables.push(name.to_string());
        }
        Ok(())
    }

    pub fn fail(&mut self, f: Failure) {
        self.failures.push(f);
    }

    pub fn failures(&self) -> &[Failure] {
        &self.failures
    }

    /// Adds a key to the manifest's `summary` object.
    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Writes `errors.csv` and the manifest `<experiment>_manifest.json`.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.failures.sort_by(|a, b| (a.theta_id, &a.task).cmp(&(b.theta_id, &b.task)));
        let rows: Vec<[String; 3]> = self
            .failures
            .iter()
            .map(|f| [f.theta_id.to_string(), f.task.clone(), f.message.clone()])
            .collect();
        self.write_table("errors.csv", &["theta_id", "task", "message"], rows)?;
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for f in &self.failures {
            *counts.entry(f.task.as_str()).or_default() += 1;
        }
        let manifest = json!({
            "experiment": self.experiment,
            "config": self.config,
            "version": env!("CARGO_PKG_VERSION"),
            "features": { "parallel": cfg!(feature = "parallel") },
            "started_unix": unix_secs(self.started),
            "finished_unix": unix_secs(SystemTime::now()),
            "wall_clock_s": self.clock.elapsed().as_secs_f64(),
            "failures": counts,
            "tables": self.tables,
            "summary": self.summary,
        });
        let path = self.path(&format!("{}_manifest.json", self.experiment));
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

/// Shortest round-trip form; `NA` for non-finite values.
pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NA".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_tables_errors_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ResultStore::create(dir.path(), "demo", json!({"samples": 2})).unwrap();
        s.write_table("t.csv", &["a", "b"], vec![vec!["1", "2"], vec!["3", "4"]]).unwrap();
        s.fail(Failure { theta_id: 5, task: "lk".into(), message: "boom, with comma".into() });
        s.note("gamma", 1.5);
        let m = s.finish().unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("t.csv")).unwrap(), "a,b\n1,2\n3,4\n");
        let errs = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(errs, "theta_id,task,message\n5,lk,\"boom, with comma\"\n");
        let v: Value = serde_json::from_str(&std::fs::read_to_string(m).unwrap()).unwrap();
        assert_eq!(v["failures"]["lk"], 1);
        assert_eq!(v["summary"]["gamma"], 1.5);
        assert_eq!(v["config"]["samples"], 2);
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(f64::INFINITY), "NA");
    }
}
