//! Run configuration: JSON ingestion, dotted-key overrides, validation.
//!
//! Every field has a default, so `{}` is a complete configuration. Unknown
//! keys are rejected with the path at which they appeared.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coupling::DistanceModel;
use crate::dynamics::{LossConvention, Protocol, SolverOptions};
use crate::integrator::{IntegratorConfig, Method};
use crate::model::CoilPair;
use crate::schedules::{
    make_lz_schedule, CdOptions, DriveSchedule, LandauZener, PhiDotMode, SampledSchedule,
    SampledTable,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("bad override `{key}`: {message}")]
    Override { key: String, message: String },
}

fn bad(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

/// Evenly spaced values on a linear or logarithmic scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: AxisScale,
}

impl GridAxis {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            scale: AxisScale::Linear,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let f = k as f64 / n;
                match self.scale {
                    AxisScale::Linear => self.min + (self.max - self.min) * f,
                    AxisScale::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect()
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(bad(path, "bounds must be finite"));
        }
        match self.count {
            0 => return Err(bad(&format!("{path}.count"), "must be at least 1")),
            1 if self.min != self.max => {
                return Err(bad(
                    &format!("{path}.count"),
                    "a single-point axis needs min == max",
                ))
            }
            1 => {}
            _ if !(self.max > self.min) => {
                return Err(bad(&format!("{path}.max"), "must exceed min"))
            }
            _ => {}
        }
        if self.scale == AxisScale::Log && !(self.min > 0.0) {
            return Err(bad(&format!("{path}.min"), "log axes need positive bounds"));
        }
        Ok(())
    }
}

/// The configured drive: a Landau-Zener sweep, or a sampled table when
/// `samples` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub kappa0: f64,
    pub delta_offset: f64,
    pub beta: f64,
    pub t0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampledTable>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            kappa0: 4e4,
            delta_offset: 2e5,
            beta: 3e9,
            t0: 1e-4,
            samples: None,
        }
    }
}

impl ScheduleConfig {
    pub fn lz(&self) -> LandauZener {
        LandauZener {
            kappa0: self.kappa0,
            delta_offset: self.delta_offset,
            beta: self.beta,
            t0: self.t0,
        }
    }

    pub fn build(&self) -> crate::Result<DriveSchedule> {
        match &self.samples {
            Some(table) => Ok(DriveSchedule::Sampled(SampledSchedule::new(table.clone())?)),
            None => make_lz_schedule(self.kappa0, self.delta_offset, self.beta, self.t0),
        }
    }
}

/// Sweep-able parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Kappa0,
    Delta,
    Beta,
    T0,
    GammaS,
    GammaD,
    GammaW,
    /// Sets `Γs = Γd` together.
    GammaSd,
    /// Coil separation; `κ₀` follows from the distance model.
    D,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Kappa0 => "kappa0",
            SweepParam::Delta => "delta",
            SweepParam::Beta => "beta",
            SweepParam::T0 => "t0",
            SweepParam::GammaS => "gamma_s",
            SweepParam::GammaD => "gamma_d",
            SweepParam::GammaW => "gamma_w",
            SweepParam::GammaSd => "gamma_sd",
            SweepParam::D => "d",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SweepParam::Kappa0 | SweepParam::Delta => "rad/s",
            SweepParam::Beta => "rad/s^2",
            SweepParam::T0 => "s",
            SweepParam::GammaS | SweepParam::GammaD | SweepParam::GammaW | SweepParam::GammaSd => {
                "1/s"
            }
            SweepParam::D => "m",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    #[serde(flatten)]
    pub grid: GridAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    Eta,
    Fidelity,
    Trajectories,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    pub protocols: Vec<Protocol>,
    pub outputs: Vec<SweepOutput>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axes: vec![SweepAxis {
                param: SweepParam::Kappa0,
                grid: GridAxis {
                    min: 1e3,
                    max: 1e5,
                    count: 9,
                    scale: AxisScale::Log,
                },
            }],
            protocols: Protocol::ALL.to_vec(),
            outputs: vec![SweepOutput::Eta, SweepOutput::Fidelity],
        }
    }
}

impl SweepSpec {
    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(bad(&format!("{path}.axes"), "need one or two axes"));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(bad(
                &format!("{path}.axes"),
                "axes must name different parameters",
            ));
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.grid.validate(&format!("{path}.axes[{i}]"))?;
        }
        if self.protocols.is_empty() {
            return Err(bad(
                &format!("{path}.protocols"),
                "need at least one protocol",
            ));
        }
        Ok(())
    }
}

/// Parameters of the four source/drain evolution runs (variants a–d).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Figure2Config {
    pub delta_offset: f64,
    pub gamma_sd: f64,
    pub gamma_w: f64,
    pub kappa0_adiabatic: f64,
    pub kappa0_tqd: f64,
    /// `[β, t₀]` for variants a, b, c, d.
    pub windows: [[f64; 2]; 4],
}

impl Default for Figure2Config {
    fn default() -> Self {
        Self {
            delta_offset: 2e5,
            gamma_sd: 4e3,
            gamma_w: 0.0,
            kappa0_adiabatic: 4e4,
            kappa0_tqd: 4e2,
            windows: [[3e9, 1e-4], [3e9, 1e-4], [3e10, 1e-5], [3e11, 1e-6]],
        }
    }
}

/// Efficiency versus initial detuning offset for several `κ₀/Γ` ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Figure4Config {
    pub kappa0: f64,
    pub ratios: Vec<f64>,
    pub delta: GridAxis,
    pub gamma_w: f64,
    /// `β·t₀`, held fixed across windows (rad/s).
    pub beta_t0: f64,
    /// Half-windows `t₀` to run, one output table each.
    pub t0_values: Vec<f64>,
}

impl Default for Figure4Config {
    fn default() -> Self {
        Self {
            kappa0: 4e4,
            ratios: vec![10.0, 50.0, 100.0],
            delta: GridAxis::linear(0.0, 1e6, 21),
            gamma_w: 1e4,
            beta_t0: 3e5,
            t0_values: vec![1e-4, 1e-6],
        }
    }
}

/// Efficiency versus coil separation. The `κ(d)` law is the top-level
/// `distance` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Figure5Config {
    pub delta_offset: f64,
    pub beta: f64,
    pub t0: f64,
    pub gamma_sd: f64,
    pub gamma_w: f64,
    pub grid: GridAxis,
}

impl Default for Figure5Config {
    fn default() -> Self {
        Self {
            delta_offset: 2e5,
            beta: 3e9,
            t0: 1e-4,
            gamma_sd: 4e3,
            gamma_w: 1e4,
            grid: GridAxis::linear(0.5, 2.5, 9),
        }
    }
}

/// Efficiency over a `κ₀ × (Γs = Γd)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Figure6Config {
    pub kappa0: GridAxis,
    pub gamma_sd: GridAxis,
    pub gamma_w: f64,
    pub delta_offset: f64,
    pub beta_t0: f64,
    pub t0_values: Vec<f64>,
}

impl Default for Figure6Config {
    fn default() -> Self {
        Self {
            kappa0: GridAxis::linear(1e3, 5e4, 25),
            gamma_sd: GridAxis::linear(1e3, 1e4, 25),
            gamma_w: 1e4,
            delta_offset: 2e5,
            beta_t0: 3e5,
            t0_values: vec![1e-4, 1e-5, 1e-6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: String,
    /// Use the fixed-step integrator so repeated runs are bit-identical.
    pub fixed_step: bool,
    pub threads: Option<usize>,
    pub phi_dot_mode: PhiDotMode,
    pub kappa_a_ramp: bool,
    pub kappa_a_ramp_fraction: f64,
    pub loss_convention: LossConvention,
    pub coils: CoilPair,
    pub schedule: ScheduleConfig,
    pub integrator: IntegratorConfig,
    pub distance: DistanceModel,
    pub sweep: SweepSpec,
    pub figure2: Figure2Config,
    pub figure4: Figure4Config,
    pub figure5: Figure5Config,
    pub figure6: Figure6Config,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: "out".into(),
            fixed_step: false,
            threads: None,
            phi_dot_mode: PhiDotMode::Exact,
            kappa_a_ramp: false,
            kappa_a_ramp_fraction: 0.01,
            loss_convention: LossConvention::Amplitude,
            coils: CoilPair::default(),
            schedule: ScheduleConfig::default(),
            integrator: IntegratorConfig::default(),
            distance: DistanceModel::default(),
            sweep: SweepSpec::default(),
            figure2: Figure2Config::default(),
            figure4: Figure4Config::default(),
            figure5: Figure5Config::default(),
            figure6: Figure6Config::default(),
        }
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(path, format!("must be positive, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(path, format!("must be non-negative, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(bad(path, "must be finite"))
    }
}

fn t0_list(path: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(bad(path, "must not be empty"));
    }
    for (k, v) in values.iter().enumerate() {
        positive(&format!("{path}[{k}]"), *v)?;
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.output_dir.is_empty() {
            return Err(bad("output_dir", "must not be empty"));
        }
        if self.threads == Some(0) {
            return Err(bad("threads", "must be at least 1"));
        }
        if !(self.kappa_a_ramp_fraction > 0.0 && self.kappa_a_ramp_fraction <= 0.5) {
            return Err(bad("kappa_a_ramp_fraction", "must lie in (0, 0.5]"));
        }
        let c = &self.coils;
        non_negative("coils.gamma_s", c.gamma_s)?;
        non_negative("coils.gamma_d", c.gamma_d)?;
        non_negative("coils.gamma_w", c.gamma_w)?;
        positive("coils.omega_s0", c.omega_s0)?;
        positive("coils.omega_d0", c.omega_d0)?;
        positive("coils.l_s", c.l_s)?;
        positive("coils.l_d", c.l_d)?;

        let s = &self.schedule;
        positive("schedule.kappa0", s.kappa0)?;
        positive("schedule.t0", s.t0)?;
        finite("schedule.delta_offset", s.delta_offset)?;
        finite("schedule.beta", s.beta)?;
        if let Some(table) = &s.samples {
            SampledSchedule::new(table.clone())
                .map_err(|e| bad("schedule.samples", e.to_string()))?;
        }

        let i = &self.integrator;
        positive("integrator.rel_tol", i.rel_tol)?;
        positive("integrator.abs_tol", i.abs_tol)?;
        if !(i.max_step > 0.0 && i.max_step <= 1.0) {
            return Err(bad("integrator.max_step", "must lie in (0, 1]"));
        }
        if i.sample_count < 2 {
            return Err(bad("integrator.sample_count", "must be at least 2"));
        }

        let d = &self.distance;
        positive("distance.kappa_ref", d.kappa_ref)?;
        positive("distance.d_ref", d.d_ref)?;
        positive("distance.exponent", d.exponent)?;

        self.sweep.validate("sweep")?;

        let f2 = &self.figure2;
        finite("figure2.delta_offset", f2.delta_offset)?;
        non_negative("figure2.gamma_sd", f2.gamma_sd)?;
        non_negative("figure2.gamma_w", f2.gamma_w)?;
        positive("figure2.kappa0_adiabatic", f2.kappa0_adiabatic)?;
        positive("figure2.kappa0_tqd", f2.kappa0_tqd)?;
        for (k, w) in f2.windows.iter().enumerate() {
            finite(&format!("figure2.windows[{k}][0]"), w[0])?;
            positive(&format!("figure2.windows[{k}][1]"), w[1])?;
        }

        let f4 = &self.figure4;
        positive("figure4.kappa0", f4.kappa0)?;
        if f4.ratios.is_empty() {
            return Err(bad("figure4.ratios", "must not be empty"));
        }
        for (k, r) in f4.ratios.iter().enumerate() {
            positive(&format!("figure4.ratios[{k}]"), *r)?;
        }
        f4.delta.validate("figure4.delta")?;
        non_negative("figure4.gamma_w", f4.gamma_w)?;
        finite("figure4.beta_t0", f4.beta_t0)?;
        t0_list("figure4.t0_values", &f4.t0_values)?;

        let f5 = &self.figure5;
        finite("figure5.delta_offset", f5.delta_offset)?;
        finite("figure5.beta", f5.beta)?;
        positive("figure5.t0", f5.t0)?;
        non_negative("figure5.gamma_sd", f5.gamma_sd)?;
        non_negative("figure5.gamma_w", f5.gamma_w)?;
        f5.grid.validate("figure5.grid")?;
        if f5.grid.min < 0.0 {
            return Err(bad("figure5.grid.min", "distances must be non-negative"));
        }

        let f6 = &self.figure6;
        f6.kappa0.validate("figure6.kappa0")?;
        if !(f6.kappa0.min > 0.0) {
            return Err(bad("figure6.kappa0.min", "couplings must be positive"));
        }
        f6.gamma_sd.validate("figure6.gamma_sd")?;
        if f6.gamma_sd.min < 0.0 {
            return Err(bad(
                "figure6.gamma_sd.min",
                "loss rates must be non-negative",
            ));
        }
        non_negative("figure6.gamma_w", f6.gamma_w)?;
        finite("figure6.delta_offset", f6.delta_offset)?;
        finite("figure6.beta_t0", f6.beta_t0)?;
        t0_list("figure6.t0_values", &f6.t0_values)?;
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut integrator = self.integrator;
        if self.fixed_step {
            integrator.method = Method::FixedRk4;
        }
        SolverOptions {
            integrator,
            cd: CdOptions {
                phi_dot_mode: self.phi_dot_mode,
                kappa_a_ramp: self.kappa_a_ramp.then_some(self.kappa_a_ramp_fraction),
            },
            losses: self.loss_convention,
        }
    }

    /// Canonical JSON form; `parse_config` of this text gives back `self`.
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&compact)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Sections searched, in order, when an override key has no dot.
const BARE_KEY_SECTIONS: [&str; 3] = ["schedule", "coils", "integrator"];

fn resolve_key(key: &str) -> Result<Vec<String>, ConfigError> {
    if key.is_empty() {
        return Err(ConfigError::Override {
            key: key.into(),
            message: "empty key".into(),
        });
    }
    if key.contains('.') {
        return Ok(key.split('.').map(str::to_string).collect());
    }
    let defaults = serde_json::to_value(RunConfig::default()).expect("config serializes");
    if defaults.get(key).is_some() {
        return Ok(vec![key.to_string()]);
    }
    for section in BARE_KEY_SECTIONS {
        if defaults[section].get(key).is_some() {
            return Ok(vec![section.to_string(), key.to_string()]);
        }
    }
    Err(ConfigError::Override {
        key: key.into(),
        message: "not a recognized key; use a dotted path such as schedule.beta".into(),
    })
}

fn set_path(root: &mut Value, path: &[String], value: Value, key: &str) -> Result<(), ConfigError> {
    let mut cur = root;
    for (k, part) in path.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| ConfigError::Override {
            key: key.into(),
            message: format!("`{}` is not an object", path[..k].join(".")),
        })?;
        if k + 1 == path.len() {
            obj.insert(part.clone(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.clone())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Apply a `KEY=VALUE` override to a raw JSON document. Values are parsed as
/// JSON when possible and taken as strings otherwise.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override {
        key: spec.into(),
        message: "expected KEY=VALUE".into(),
    })?;
    let key = key.trim().trim_start_matches("--");
    let value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let path = resolve_key(key)?;
    set_path(doc, &path, value, key)
}

/// Parse JSON text plus overrides into a validated configuration.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if !doc.is_object() {
        return Err(bad("", "top level must be a JSON object"));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Invalid {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read a config file (or start from `{}`) and apply overrides.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })?,
        None => "{}".to_string(),
    };
    parse_config_str(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = parse_config_str("{}", &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.solver_options(), SolverOptions::default());
    }

    #[test]
    fn negative_t0_names_field() {
        match parse_config_str(r#"{"schedule": {"t0": -1}}"#, &[]) {
            Err(ConfigError::Invalid { path, .. }) => assert_eq!(path, "schedule.t0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        match parse_config_str(r#"{"coils": {"gamma_x": 1}}"#, &[]) {
            Err(ConfigError::Invalid { path, message }) => {
                assert!(path.starts_with("coils"), "{path}");
                assert!(message.contains("gamma_x"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_config_str(r#"{"bogus": 1}"#, &[]).is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_config_str("{\n  \"schedule\": {,}\n}", &[]) {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overrides_supersede_file() {
        let cfg =
            parse_config_str(r#"{"schedule": {"beta": 1e9}}"#, &["beta=3e10".into()]).unwrap();
        assert_eq!(cfg.schedule.beta, 3e10);
        assert!(cfg.emit().contains("30000000000"));
        let cfg = parse_config_str(
            "{}",
            &[
                "--beta=3e10".into(),
                "coils.gamma_w=1e4".into(),
                "phi_dot_mode=verbatim".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.schedule.beta, 3e10);
        assert_eq!(cfg.coils.gamma_w, 1e4);
        assert_eq!(cfg.phi_dot_mode, PhiDotMode::Verbatim);
        let cfg = parse_config_str("{}", &["gamma_s=7".into(), "sample_count=11".into()]).unwrap();
        assert_eq!(cfg.coils.gamma_s, 7.0);
        assert_eq!(cfg.integrator.sample_count, 11);
        assert!(matches!(
            parse_config_str("{}", &["nonsense=1".into()]),
            Err(ConfigError::Override { .. })
        ));
        assert!(matches!(
            parse_config_str("{}", &["schedule.beta".into()]),
            Err(ConfigError::Override { .. })
        ));
    }

    #[test]
    fn sampled_schedule_config() {
        let cfg = parse_config_str(
            r#"{"schedule": {"samples": {"t": [0, 1e-4, 2e-4], "delta": [-1e5, 0, 1e5], "kappa": [4e4, 4e4, 4e4]}}}"#,
            &[],
        )
        .unwrap();
        let s = cfg.schedule.build().unwrap();
        assert_eq!(s.window(), 2e-4);
        assert!(parse_config_str(
            r#"{"schedule": {"samples": {"t": [0, 0], "delta": [0, 0], "kappa": [1, 1]}}}"#,
            &[]
        )
        .is_err());
    }

    #[test]
    fn grid_axes() {
        assert_eq!(GridAxis::linear(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        let log = GridAxis {
            min: 1.0,
            max: 100.0,
            count: 3,
            scale: AxisScale::Log,
        };
        let v = log.values();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(GridAxis::linear(2.0, 2.0, 1).values(), vec![2.0]);
        assert!(GridAxis::linear(1.0, 2.0, 1).validate("x").is_err());
        assert!(GridAxis::linear(2.0, 1.0, 3).validate("x").is_err());
    }

    #[test]
    fn solver_options_follow_flags() {
        let cfg = parse_config_str(
            r#"{"fixed_step": true, "kappa_a_ramp": true, "loss_convention": "energy"}"#,
            &[],
        )
        .unwrap();
        let o = cfg.solver_options();
        assert_eq!(o.integrator.method, Method::FixedRk4);
        assert_eq!(o.cd.kappa_a_ramp, Some(0.01));
        assert_eq!(o.losses, LossConvention::Energy);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        assert_eq!(a.hash(), RunConfig::default().hash());
        let mut b = a.clone();
        b.schedule.beta = 3.1e9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(
            kappa0 in 1.0f64..1e6,
            beta in -1e12f64..1e12,
            t0 in 1e-7f64..1e-3,
            gs in 0.0f64..1e5,
            gw in 0.0f64..1e5,
            fixed in any::<bool>(),
            ramp in any::<bool>(),
            mode in prop_oneof![Just(PhiDotMode::Exact), Just(PhiDotMode::Verbatim), Just(PhiDotMode::Off)],
            samples in 2usize..5000,
            threads in proptest::option::of(1usize..64),
        ) {
            let mut cfg = RunConfig::default();
            cfg.schedule.kappa0 = kappa0;
            cfg.schedule.beta = beta;
            cfg.schedule.t0 = t0;
            cfg.coils.gamma_s = gs;
            cfg.coils.gamma_w = gw;
            cfg.fixed_step = fixed;
            cfg.kappa_a_ramp = ramp;
            cfg.phi_dot_mode = mode;
            cfg.integrator.sample_count = samples;
            cfg.threads = threads;
            let back = parse_config_str(&cfg.emit(), &[]).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
