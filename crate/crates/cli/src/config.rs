//! Scenario configuration: JSON in, validated [`ScenarioConfig`] out.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use grainflow_core::analysis::LsSampling;
use grainflow_core::{Error as CoreError, FlowParams, GridFunction, SigmaModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

const SIGMA_KINDS: [&str; 3] = ["constant", "trig_periodic", "quadratic_convex"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    MalformedJson(serde_json::Error),

    #[error("unknown sigma kind `{0}` (expected constant, trig_periodic or quadratic_convex)")]
    UnknownSigmaKind(String),

    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("`{field}` must be positive, got {value}")]
    NonPositive { field: String, value: f64 },

    #[error("invalid sigma: {0}")]
    InvalidSigma(String),

    #[error("sigma violates the positivity floor: min sigma = {0}")]
    PositivityFloor(f64),

    #[error("`flow.dt` = {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("`flow.n` = {0} is not a power of two >= 8")]
    InvalidGridSize(usize),

    #[error("`tasks` must list at least one task")]
    EmptyTasks,

    #[error("`initial_u.path`: `{0}` does not exist")]
    MissingFile(PathBuf),
}

impl ConfigError {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "io_error",
            ConfigError::MalformedJson(_) => "malformed_json",
            ConfigError::UnknownSigmaKind(_) => "unknown_sigma_kind",
            ConfigError::InvalidField { .. } => "invalid_field",
            ConfigError::NonPositive { .. } => "non_positive_parameter",
            ConfigError::InvalidSigma(_) => "invalid_sigma",
            ConfigError::PositivityFloor(_) => "positivity_floor",
            ConfigError::CflViolation { .. } => "cfl_violation",
            ConfigError::InvalidGridSize(_) => "invalid_grid_size",
            ConfigError::EmptyTasks => "empty_tasks",
            ConfigError::MissingFile(_) => "missing_file",
        }
    }

    fn field(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidField {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// Initial profile `u₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    Zero,
    /// `amplitude · sin(2π frequency x)`.
    Sine {
        amplitude: f64,
        frequency: f64,
    },
    /// `Σ amplitude · sin(2π k x + phase)`.
    FourierModes {
        modes: Vec<FourierMode>,
    },
    /// JSON grid function `{"n": .., "values": [..]}`, relative to the
    /// config file.
    FromFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub k: usize,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simulate,
    Dissipation,
    LsFit,
    Stability,
    Length,
    InequalitySuite,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Dissipation => "dissipation",
            Task::LsFit => "ls_fit",
            Task::Stability => "stability",
            Task::Length => "length",
            Task::InequalitySuite => "inequality_suite",
        }
    }

    fn needs_trajectory(self) -> bool {
        matches!(
            self,
            Task::Simulate | Task::Dissipation | Task::Stability | Task::Length
        )
    }
}

/// Optional overrides of the LS sampling plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LsConfig {
    /// Equilibrium to sample around; defaults to the critical point the
    /// flow from `alpha0` converges to.
    pub alpha_bar: Option<f64>,
    pub sampling: LsSampling,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawFlow {
    mu: f64,
    gamma: f64,
    n: Option<usize>,
    dt: Option<f64>,
    t_end: f64,
    cfl_safety: f64,
    record_every: Option<usize>,
    snapshot_every: Option<usize>,
}

impl Default for RawFlow {
    fn default() -> Self {
        Self {
            mu: 1.0,
            gamma: 1.0,
            n: None,
            dt: None,
            t_end: default_t_end(),
            cfl_safety: 1.0,
            record_every: None,
            snapshot_every: None,
        }
    }
}

fn default_t_end() -> f64 {
    5.0
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    sigma: SigmaModel,
    initial_u: InitialProfile,
    alpha0: f64,
    #[serde(default)]
    flow: RawFlow,
    tasks: Vec<Task>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    ls: LsConfig,
    #[serde(default = "default_tolerance")]
    dissipation_tolerance: f64,
    csv_max_rows: Option<usize>,
}

/// Grid size used when neither the config nor an input file fixes one.
pub const DEFAULT_N: usize = 256;

/// Default cap on rows in the exported trajectory CSV.
pub const DEFAULT_CSV_MAX_ROWS: usize = 5000;

/// A validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub sigma: SigmaModel,
    pub initial_u: InitialProfile,
    #[serde(skip)]
    pub u0: GridFunction,
    pub alpha0: f64,
    pub flow: FlowParams,
    /// Requested tasks, in execution order.
    pub tasks: BTreeSet<Task>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub ls: LsConfig,
    pub dissipation_tolerance: f64,
    pub csv_max_rows: usize,
}

impl ScenarioConfig {
    pub fn wants(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    /// Whether any task needs the time evolution.
    pub fn needs_trajectory(&self) -> bool {
        self.tasks.iter().any(|t| t.needs_trajectory())
    }

    /// Whether any task needs the LS fit.
    pub fn needs_ls_fit(&self) -> bool {
        self.wants(Task::LsFit) || self.wants(Task::Stability) || self.wants(Task::Length)
    }
}

/// Read and validate a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    parse_config_str(&text, base, stem)
}

/// Validate a scenario given as JSON text. Relative input paths resolve
/// against `base_dir`; `default_name` is used when the config has none.
pub fn parse_config_str(
    text: &str,
    base_dir: &Path,
    default_name: &str,
) -> Result<ScenarioConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(ConfigError::MalformedJson)?;
    if let Some(kind) = value.pointer("/sigma/kind").and_then(Value::as_str) {
        if !SIGMA_KINDS.contains(&kind) {
            return Err(ConfigError::UnknownSigmaKind(kind.to_string()));
        }
    }
    let raw: RawConfig =
        serde_json::from_value(value).map_err(|e| ConfigError::field("config", e.to_string()))?;

    raw.sigma.validate().map_err(|e| match e {
        CoreError::PositivityFloor(v) => ConfigError::PositivityFloor(v),
        other => ConfigError::InvalidSigma(other.to_string()),
    })?;
    if !raw.alpha0.is_finite() {
        return Err(ConfigError::field("alpha0", "must be finite"));
    }
    if raw.tasks.is_empty() {
        return Err(ConfigError::EmptyTasks);
    }
    if !(raw.dissipation_tolerance.is_finite() && raw.dissipation_tolerance > 0.0) {
        return Err(ConfigError::NonPositive {
            field: "dissipation_tolerance".into(),
            value: raw.dissipation_tolerance,
        });
    }

    let (initial_u, file_u) = resolve_profile(raw.initial_u, base_dir)?;
    let n = match (&file_u, raw.flow.n) {
        (Some(u), Some(n)) if u.n() != n => {
            return Err(ConfigError::field(
                "flow.n",
                format!("{n} does not match the {} samples of initial_u", u.n()),
            ))
        }
        (Some(u), _) => u.n(),
        (None, n) => n.unwrap_or(DEFAULT_N),
    };
    let flow = resolve_flow(&raw.flow, n, &raw.sigma, raw.alpha0)?;
    let u0 = match file_u {
        Some(u) => u,
        None => build_profile(&initial_u, n)?,
    };

    let name = raw.name.unwrap_or_else(|| default_name.to_string());
    let output_dir = raw
        .output_dir
        .unwrap_or_else(|| PathBuf::from("grainflow-output").join(&name));
    Ok(ScenarioConfig {
        name,
        sigma: raw.sigma,
        initial_u,
        u0,
        alpha0: raw.alpha0,
        flow,
        tasks: raw.tasks.into_iter().collect(),
        output_dir,
        seed: raw.seed,
        ls: raw.ls,
        dissipation_tolerance: raw.dissipation_tolerance,
        csv_max_rows: raw.csv_max_rows.unwrap_or(DEFAULT_CSV_MAX_ROWS).max(2),
    })
}

fn resolve_profile(
    profile: InitialProfile,
    base_dir: &Path,
) -> Result<(InitialProfile, Option<GridFunction>), ConfigError> {
    let InitialProfile::FromFile { path } = profile else {
        return Ok((profile, None));
    };
    let full = if path.is_absolute() {
        path.clone()
    } else {
        base_dir.join(&path)
    };
    if !full.exists() {
        return Err(ConfigError::MissingFile(full));
    }
    let text = fs::read_to_string(&full).map_err(|source| ConfigError::Io {
        path: full.clone(),
        source,
    })?;
    let u: GridFunction = serde_json::from_str(&text)
        .map_err(|e| ConfigError::field("initial_u.path", e.to_string()))?;
    Ok((InitialProfile::FromFile { path }, Some(u)))
}

fn build_profile(profile: &InitialProfile, n: usize) -> Result<GridFunction, ConfigError> {
    let check_mode = |k: f64, field: &str| {
        if k >= 1.0 && k.fract() == 0.0 && (k as usize) < n / 2 {
            Ok(())
        } else {
            Err(ConfigError::field(
                field,
                format!("mode {k} must be an integer in [1, {})", n / 2),
            ))
        }
    };
    let finite = |v: f64, field: &str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::field(field, "must be finite"))
        }
    };
    let built = match profile {
        InitialProfile::Zero => GridFunction::zeros(n),
        InitialProfile::Sine {
            amplitude,
            frequency,
        } => {
            finite(*amplitude, "initial_u.amplitude")?;
            check_mode(*frequency, "initial_u.frequency")?;
            GridFunction::from_fn(n, |x| amplitude * (2.0 * PI * frequency * x).sin())
        }
        InitialProfile::FourierModes { modes } => {
            for m in modes {
                check_mode(m.k as f64, "initial_u.modes.k")?;
                finite(m.amplitude, "initial_u.modes.amplitude")?;
                finite(m.phase, "initial_u.modes.phase")?;
            }
            GridFunction::from_fn(n, |x| {
                modes
                    .iter()
                    .map(|m| m.amplitude * (2.0 * PI * m.k as f64 * x + m.phase).sin())
                    .sum()
            })
        }
        InitialProfile::FromFile { .. } => unreachable!("file profiles are loaded eagerly"),
    };
    built.map_err(|_| ConfigError::InvalidGridSize(n))
}

fn resolve_flow(
    raw: &RawFlow,
    n: usize,
    sigma: &SigmaModel,
    alpha0: f64,
) -> Result<FlowParams, ConfigError> {
    let mut params = FlowParams {
        mu: raw.mu,
        gamma: raw.gamma,
        dt: 0.0,
        t_end: raw.t_end,
        n,
        cfl_safety: raw.cfl_safety,
        record_every: raw.record_every,
        snapshot_every: raw.snapshot_every,
    };
    // validate everything but dt first so the default bound is meaningful
    params
        .validate(sigma, alpha0)
        .map_err(|e| flow_error(e, &params))?;
    params.dt = match raw.dt {
        Some(dt) => dt,
        None => params.cfl_bound(sigma, alpha0),
    };
    if !(params.dt.is_finite() && params.dt > 0.0) {
        return Err(ConfigError::NonPositive {
            field: "flow.dt".into(),
            value: params.dt,
        });
    }
    params
        .validate(sigma, alpha0)
        .map_err(|e| flow_error(e, &params))?;
    if params.record_every == Some(0) {
        return Err(ConfigError::field(
            "flow.record_every",
            "must be at least 1",
        ));
    }
    if params.snapshot_every == Some(0) {
        return Err(ConfigError::field(
            "flow.snapshot_every",
            "must be at least 1",
        ));
    }
    Ok(params)
}

fn flow_error(e: CoreError, params: &FlowParams) -> ConfigError {
    match e {
        CoreError::CflViolation { dt, bound } => ConfigError::CflViolation { dt, bound },
        CoreError::InvalidGridSize(n) => ConfigError::InvalidGridSize(n),
        CoreError::InvalidFlowParams { field, reason } => {
            let value = match field {
                "mu" => Some(params.mu),
                "gamma" => Some(params.gamma),
                "t_end" => Some(params.t_end),
                _ => None,
            };
            match value {
                Some(value) => ConfigError::NonPositive {
                    field: format!("flow.{field}"),
                    value,
                },
                None => ConfigError::field(&format!("flow.{field}"), reason),
            }
        }
        other => ConfigError::field("flow", other.to_string()),
    }
}
