//! JSON run configuration: parsing, defaults, `key=value` overrides and
//! validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::adiabatic::{Regime, DEFAULT_MARGIN_FACTOR};
use crate::design::{GaussianTarget, InfeasiblePolicy, DEFAULT_DELTA_MAX_OVER_ETA, DEFAULT_P_TOT};
use crate::dynamics::IntegrationSettings;
use crate::model::SystemParams;
use crate::pulse::DEFAULT_THRESHOLD_FRACTION;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(serde_json::Error),
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("bad override `{0}`: expected key.path=value")]
    Override(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Eigens,
    Ldos,
    Dynamics,
    Shape,
    Adiabaticity,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Eigens,
        Scenario::Ldos,
        Scenario::Dynamics,
        Scenario::Shape,
        Scenario::Adiabaticity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Eigens => "eigens",
            Scenario::Ldos => "ldos",
            Scenario::Dynamics => "dynamics",
            Scenario::Shape => "shape",
            Scenario::Adiabaticity => "adiabaticity",
        }
    }

    fn needs_g(self) -> bool {
        matches!(self, Scenario::Dynamics | Scenario::Shape | Scenario::Adiabaticity)
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario '{s}'"))
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub eta: f64,
    #[serde(default = "one")]
    pub kappa_t: f64,
    /// Defaults to `kappa_t`.
    #[serde(default)]
    pub kappa_l: Option<f64>,
    /// Defaults to `kappa_t`.
    #[serde(default)]
    pub kappa_r: Option<f64>,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub omega_e: f64,
    #[serde(default)]
    pub extra_target_loss: f64,
}

impl SystemConfig {
    pub fn params(&self) -> SystemParams<f64> {
        SystemParams {
            eta: self.eta,
            kappa_t: self.kappa_t,
            kappa_l: self.kappa_l.unwrap_or(self.kappa_t),
            kappa_r: self.kappa_r.unwrap_or(self.kappa_t),
            g: self.g.unwrap_or(0.0),
            gamma: self.gamma,
            omega_e: self.omega_e,
            extra_target_loss: self.extra_target_loss,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuumConfig {
    pub n_modes: usize,
    pub bandwidth: f64,
    /// Bandwidth must be at least this multiple of the expected pulse
    /// spectral width.
    pub guard_factor: f64,
}

impl Default for ContinuumConfig {
    fn default() -> Self {
        Self {
            n_modes: 2001,
            bandwidth: 40.0,
            guard_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Zero,
    Constant { value: f64 },
    LinearRamp { rate: f64 },
    Sampled { samples: Vec<(f64, f64)> },
    /// `t,delta` CSV file.
    Csv { path: PathBuf },
    /// Designed from `target`.
    Designed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub t0: f64,
    pub sigma: f64,
    #[serde(default = "default_p_tot")]
    pub p_tot: f64,
}

fn default_p_tot() -> f64 {
    DEFAULT_P_TOT
}

impl From<TargetConfig> for GaussianTarget<f64> {
    fn from(t: TargetConfig) -> Self {
        GaussianTarget {
            t0: t.t0,
            sigma: t.sigma,
            p_tot: t.p_tot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub n_samples: usize,
    pub delta_max_over_eta: f64,
    pub policy: InfeasiblePolicy,
    /// Defaults to `[0, t_final]`.
    pub window: Option<(f64, f64)>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            n_samples: 241,
            delta_max_over_eta: DEFAULT_DELTA_MAX_OVER_ETA,
            policy: InfeasiblePolicy::Reject,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub threshold_fraction: f64,
    /// Window for an exponential fit of the emitter population.
    pub decay_fit_window: Option<(f64, f64)>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
            decay_fit_window: None,
        }
    }
}

/// Δ/η range for the `eigens` and `ldos` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    /// Zero all cavity losses for the eigenvalue sweep.
    pub lossless: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            min: -4.0,
            max: 4.0,
            steps: 401,
            lossless: true,
        }
    }
}

impl SweepConfig {
    pub fn points(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticityConfig {
    pub regime: Regime,
    pub factor: f64,
}

impl Default for AdiabaticityConfig {
    fn default() -> Self {
        Self {
            regime: Regime::Shaping,
            factor: DEFAULT_MARGIN_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write CSV data files next to the manifest.
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub system: SystemConfig,
    #[serde(default)]
    pub continuum: ContinuumConfig,
    #[serde(default)]
    pub integration: IntegrationSettings<f64>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub adiabaticity: AdiabaticityConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn params(&self) -> SystemParams<f64> {
        self.system.params()
    }

    /// Fills optional fields with their effective values so the echoed
    /// config is complete.
    pub fn resolved(mut self) -> Self {
        let p = self.params();
        self.system.kappa_l = Some(p.kappa_l);
        self.system.kappa_r = Some(p.kappa_r);
        if self.schedule.is_none() {
            self.schedule = Some(match self.scenario {
                Scenario::Shape => ScheduleSpec::Designed,
                _ => ScheduleSpec::Zero,
            });
        }
        if self.design.window.is_none() {
            self.design.window = Some((0.0, self.integration.t_final));
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.params()
            .validate_for_dynamics()
            .map_err(|e| ConfigError::Invalid(format!("system: {e}")))?;
        if self.scenario.needs_g() && self.system.g.is_none() {
            return invalid(format!("scenario {} needs system.g", self.scenario.name()));
        }
        self.integration
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("integration: {e}")))?;
        let c = &self.continuum;
        if c.n_modes < 2 || !(c.bandwidth > 0.0) || !(c.guard_factor >= 0.0) {
            return invalid("continuum: need n_modes >= 2, bandwidth > 0, guard_factor >= 0".into());
        }
        let s = &self.sweep;
        if s.steps < 2 || !(s.max > s.min) || !s.min.is_finite() || !s.max.is_finite() {
            return invalid("sweep: need steps >= 2 and min < max".into());
        }
        let a = self.analysis.threshold_fraction;
        if !(a > 0.0 && a < 1.0) {
            return invalid(format!("analysis.threshold_fraction = {a} must lie in (0, 1)"));
        }
        if !(self.adiabaticity.factor > 0.0) {
            return invalid("adiabaticity.factor must be > 0".into());
        }
        if let Some(t) = self.target {
            GaussianTarget::from(t)
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("target: {e}")))?;
        }
        let designed = matches!(self.schedule, Some(ScheduleSpec::Designed));
        if (self.scenario == Scenario::Shape || designed) && self.target.is_none() {
            return invalid("a designed schedule needs `target`".into());
        }
        if self.scenario == Scenario::Shape
            && !matches!(self.schedule, None | Some(ScheduleSpec::Designed))
        {
            return invalid("the shape scenario designs its own schedule; drop `schedule`".into());
        }
        if self.design.n_samples < 2 || !(self.design.delta_max_over_eta > 0.0) {
            return invalid("design: need n_samples >= 2 and delta_max_over_eta > 0".into());
        }
        Ok(())
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(ConfigError::Syntax)?;
    from_value(value)
}

/// Typed conversion of an already-parsed document, with field paths in
/// schema errors.
pub fn from_value(value: Value) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg.resolved())
}

/// Reads `path`, applies `key.path=value` overrides, then parses.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut value: Value = serde_json::from_str(&text).map_err(ConfigError::Syntax)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    from_value(value)
}

/// Sets a dotted path inside a JSON document. The value is read as JSON
/// when it parses, otherwise as a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.into()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(assignment.into()));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut node = doc;
    for part in key.split('.') {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(part)
            .or_insert(Value::Null);
    }
    *node = value;
    Ok(())
}
