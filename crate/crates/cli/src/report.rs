//! Checks, summaries and artifact writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use grainflow_core::{LsSample, Trajectory};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

/// Process exit status of a scenario or suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Pass = 0,
    AssertionFailed = 1,
    BlowUp = 2,
    ConfigError = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// The more severe of two statuses.
    pub fn worst(self, other: ExitStatus) -> ExitStatus {
        self.max(other)
    }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot serialize `{path}`: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("cannot write CSV `{path}`: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// One asserted comparison. `invariant` names the property being checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub invariant: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: &str, invariant: &str, value: f64, limit: f64) -> Self {
        Self::new(name, invariant, value <= limit, value, limit)
    }

    /// Passes when `value ≥ limit`.
    pub fn at_least(name: &str, invariant: &str, value: f64, limit: f64) -> Self {
        Self::new(name, invariant, value >= limit, value, limit)
    }

    /// Boolean outcome; `value` records 1 for true.
    pub fn holds(name: &str, invariant: &str, ok: bool) -> Self {
        Self::new(name, invariant, ok, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    fn new(name: &str, invariant: &str, passed: bool, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            invariant: invariant.to_string(),
            passed,
            value,
            limit,
        }
    }
}

/// Contents of `summary.json`. Keys are ordered and nothing depends on the
/// host or wall clock, so equal inputs give equal bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub passed: bool,
    pub blow_up: Option<f64>,
    pub checks: Vec<Check>,
    /// Task name to task report, in execution order.
    pub reports: Vec<(String, Value)>,
}

impl Summary {
    pub fn new(scenario: &str, seed: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            passed: true,
            blow_up: None,
            checks: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        if !check.passed {
            log::warn!(
                "{}: check `{}` failed ({} vs limit {})",
                self.scenario,
                check.name,
                check.value,
                check.limit
            );
        }
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn report<T: Serialize>(&mut self, task: &str, report: &T) {
        let value = serde_json::to_value(report).unwrap_or(Value::Null);
        self.reports.push((task.to_string(), value));
    }

    pub fn status(&self) -> ExitStatus {
        if self.blow_up.is_some() {
            ExitStatus::BlowUp
        } else if self.passed {
            ExitStatus::Pass
        } else {
            ExitStatus::AssertionFailed
        }
    }

    fn to_json(&self) -> Value {
        let reports: serde_json::Map<String, Value> = self.reports.iter().cloned().collect();
        serde_json::json!({
            "scenario": self.scenario,
            "seed": self.seed,
            "passed": self.passed,
            "exit_code": self.status().code(),
            "blow_up_at": self.blow_up,
            "checks": self.checks,
            "reports": reports,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, OutputError> {
        write_json(dir, "summary.json", &self.to_json())
    }
}

pub const TRAJECTORY_HEADER: [&str; 11] = [
    "t",
    "energy",
    "diss_lhs",
    "diss_rhs",
    "mean_u",
    "sup_v",
    "sup_ux_sq",
    "length",
    "sup_curvature",
    "grad_x",
    "grad_y",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(
    dir: &Path,
    file: &str,
    value: &T,
) -> Result<PathBuf, OutputError> {
    ensure_dir(dir)?;
    let path = dir.join(file);
    let mut text = serde_json::to_string_pretty(value).map_err(|source| OutputError::Json {
        path: path.clone(),
        source,
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

/// Record indices kept when at most `max_rows` rows are exported: an even
/// stride, always including the first and last record.
pub fn csv_rows(len: usize, max_rows: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let stride = len.div_ceil(max_rows.max(2) - 1).max(1);
    let mut rows: Vec<usize> = (0..len).step_by(stride).collect();
    if *rows.last().unwrap() != len - 1 {
        rows.push(len - 1);
    }
    rows
}

pub fn write_trajectory_csv(
    dir: &Path,
    traj: &Trajectory,
    max_rows: usize,
) -> Result<PathBuf, OutputError> {
    ensure_dir(dir)?;
    let path = dir.join("trajectory.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err(&path))?;
    for i in csv_rows(traj.len(), max_rows) {
        let d = &traj.diagnostics[i];
        let row = [
            traj.times[i],
            d.energy,
            d.dissipation_lhs,
            d.dissipation_rhs,
            d.mean_u,
            d.sup_v,
            d.sup_ux_sq,
            d.length,
            d.sup_curvature,
            d.grad_norm_x,
            d.grad_norm_y,
        ];
        w.write_record(row.iter().map(|v| format_float(*v)))
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

pub fn write_ls_csv(dir: &Path, samples: &[LsSample]) -> Result<PathBuf, OutputError> {
    ensure_dir(dir)?;
    let path = dir.join("ls_samples.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["grad_y_norm", "energy_gap"])
        .map_err(csv_err(&path))?;
    for s in samples {
        w.write_record([format_float(s.grad_y_norm), format_float(s.energy_gap)])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// Snapshots as a JSON array of `{t, u, alpha}`.
pub fn write_snapshots(dir: &Path, traj: &Trajectory) -> Result<PathBuf, OutputError> {
    #[derive(Serialize)]
    struct Entry<'a> {
        t: f64,
        u: &'a grainflow_core::GridFunction,
        alpha: f64,
    }
    let entries: Vec<Entry> = traj
        .snapshots
        .iter()
        .map(|s| Entry {
            t: s.t,
            u: &s.state.u,
            alpha: s.state.alpha,
        })
        .collect();
    ensure_dir(dir)?;
    let path = dir.join("snapshots.json");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    let mut out = std::io::BufWriter::new(file);
    serde_json::to_writer(&mut out, &entries).map_err(|source| OutputError::Json {
        path: path.clone(),
        source,
    })?;
    out.write_all(b"\n").map_err(io_err(&path))?;
    out.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// Shortest round-trip representation.
fn format_float(v: f64) -> String {
    let mut buf = format!("{v:?}");
    if buf == "-0.0" {
        buf = "0.0".into();
    }
    buf
}
