//! Run configuration: TOML on disk, strict schema, dotted-path overrides.
//!
//! Values are merged as a JSON tree (file, then `--set`, then subcommand
//! flags) and only then deserialized, so every override is checked against
//! the same schema as the file and the resolved tree can be written back
//! into the manifest verbatim.

use std::path::{Path, PathBuf};

use omcat_core::consts::TWO_PI;
use omcat_core::fock::Truncation;
use omcat_core::grid::GridSpec;
use omcat_core::params::{DriveParams, InteractionAngle, PulseParams, SystemParams};
use omcat_core::subtraction::SubtractionOptions;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const PAPER_DEFAULTS: &str = include_str!("../configs/paper_defaults.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub system: SystemSection,
    pub drive: DriveSection,
    pub pulse: PulseSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub subtract: SubtractSection,
    #[serde(default)]
    pub fidelity: FidelitySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub omega_m_over_2pi: f64,
    pub omega_b_over_2pi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c_over_2pi: Option<f64>,
    pub kappa_m_over_2pi: f64,
    pub kappa_b_over_2pi: f64,
    pub kappa_c_over_2pi: f64,
    pub magnomechanical_g0_over_2pi: f64,
    pub optomechanical_g0_over_2pi: f64,
    /// Bath temperature (K).
    pub temperature: f64,
}

/// `G-` plus exactly one of `ratio` or `g_plus_over_2pi`; alternatively
/// both Rabi frequencies, from which the couplings are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_minus_over_2pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_plus_over_2pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_plus_over_2pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_minus_over_2pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub wavelength: f64,
    pub power: f64,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tan_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub n_trunc_b: usize,
    pub guard_b: usize,
    pub n_trunc_c: usize,
    pub guard_c: usize,
    pub leakage_budget: f64,
    pub allow_leakage: bool,
    pub efficiency: f64,
    pub grid_half_width: f64,
    pub grid_points: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let trunc = Truncation::default();
        let sub = SubtractionOptions::default();
        Self {
            n_trunc_b: trunc.n_trunc,
            guard_b: trunc.guard,
            n_trunc_c: sub.n_trunc_c,
            guard_c: sub.guard_c,
            leakage_budget: trunc.leakage_budget,
            allow_leakage: trunc.allow_leakage,
            efficiency: sub.efficiency,
            grid_half_width: 16.0,
            grid_points: 241,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum SweepAxis {
    #[serde(rename = "ratio")]
    #[value(name = "ratio")]
    Ratio,
    #[serde(rename = "T")]
    #[value(name = "T")]
    Temperature,
    #[serde(rename = "G_minus")]
    #[value(name = "G_minus")]
    GMinus,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Ratio => "ratio",
            SweepAxis::Temperature => "T",
            SweepAxis::GMinus => "G_minus",
        }
    }
}

/// Linear sweep. `start`/`stop` are a ratio, a temperature (K) or
/// `G-/2pi` (Hz) depending on the axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub optimize: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Ratio,
            start: 0.5,
            stop: 0.99,
            points: 50,
            optimize: false,
        }
    }
}

impl SweepSection {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 {
            return Err(CliError::Usage(format!("sweep.points: need at least 2, got {}", self.points)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::Usage("sweep.start/sweep.stop must be finite".into()));
        }
        let n = self.points - 1;
        Ok((0..=n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / n as f64)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubtractSection {
    pub k: usize,
}

impl Default for SubtractSection {
    fn default() -> Self {
        Self { k: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ParityChoice {
    /// Follow the sign of the state's measured parity.
    Auto,
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelitySection {
    pub parity: ParityChoice,
    pub alpha_max: f64,
    pub phase_search: bool,
}

impl Default for FidelitySection {
    fn default() -> Self {
        Self {
            parity: ParityChoice::Auto,
            alpha_max: 5.0,
            phase_search: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn system_params(&self) -> SystemParams {
        let s = &self.system;
        SystemParams {
            omega_m: TWO_PI * s.omega_m_over_2pi,
            omega_b: TWO_PI * s.omega_b_over_2pi,
            omega_c: s.omega_c_over_2pi.map(|f| TWO_PI * f),
            kappa_m: TWO_PI * s.kappa_m_over_2pi,
            kappa_b: TWO_PI * s.kappa_b_over_2pi,
            kappa_c: TWO_PI * s.kappa_c_over_2pi,
            magnomechanical_g0: TWO_PI * s.magnomechanical_g0_over_2pi,
            optomechanical_g0: TWO_PI * s.optomechanical_g0_over_2pi,
            temperature: s.temperature,
        }
    }

    pub fn drive_params(&self) -> Result<DriveParams, CliError> {
        let d = &self.drive;
        match (d.rabi_plus_over_2pi, d.rabi_minus_over_2pi) {
            (Some(plus), Some(minus)) => {
                if d.g_minus_over_2pi.is_some() || d.g_plus_over_2pi.is_some() || d.ratio.is_some() {
                    return Err(CliError::Usage(
                        "drive: give either the Rabi frequencies or the couplings, not both".into(),
                    ));
                }
                return Ok(DriveParams::from_rabi(TWO_PI * plus, TWO_PI * minus, &self.system_params()));
            }
            (None, None) => {}
            _ => {
                return Err(CliError::Usage(
                    "drive: rabi_plus_over_2pi and rabi_minus_over_2pi go together".into(),
                ))
            }
        }
        let g_minus = d
            .g_minus_over_2pi
            .ok_or_else(|| CliError::Usage("drive.g_minus_over_2pi: missing".into()))?
            * TWO_PI;
        match (d.g_plus_over_2pi, d.ratio) {
            (Some(g_plus), None) => Ok(DriveParams::new(TWO_PI * g_plus, g_minus)),
            (None, Some(ratio)) => Ok(DriveParams::from_ratio(g_minus, ratio)),
            _ => Err(CliError::Usage(
                "drive: set exactly one of `ratio` and `g_plus_over_2pi`".into(),
            )),
        }
    }

    pub fn pulse_params(&self) -> Result<PulseParams, CliError> {
        let p = &self.pulse;
        let theta = match (p.tan_theta, p.theta) {
            (Some(t), None) => Some(InteractionAngle::from_tan(t)?),
            (None, Some(t)) => Some(InteractionAngle::new(t)?),
            (None, None) => None,
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("pulse: set at most one of `tan_theta` and `theta`".into()))
            }
        };
        Ok(PulseParams {
            wavelength: p.wavelength,
            power: p.power,
            duration: p.duration,
            theta,
        })
    }

    pub fn truncation(&self) -> Truncation {
        let n = &self.numerics;
        Truncation {
            n_trunc: n.n_trunc_b,
            guard: n.guard_b,
            leakage_budget: n.leakage_budget,
            allow_leakage: n.allow_leakage,
        }
    }

    pub fn subtraction_options(&self) -> SubtractionOptions {
        let n = &self.numerics;
        SubtractionOptions {
            n_trunc_c: n.n_trunc_c,
            guard_c: n.guard_c,
            leakage_budget: n.leakage_budget,
            allow_leakage: n.allow_leakage,
            efficiency: n.efficiency,
        }
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        let n = &self.numerics;
        if !(n.grid_half_width > 0.0 && n.grid_half_width.is_finite()) {
            return Err(CliError::Usage("numerics.grid_half_width: must be finite and > 0".into()));
        }
        let grid = GridSpec::square(n.grid_half_width, n.grid_points);
        grid.validate()?;
        Ok(grid)
    }
}

/// Loads the base tree: the file at `path`, or the shipped defaults.
///
/// A `.json` path is read as a run manifest and its `resolved_config` is
/// used, which is how earlier runs are replayed.
pub fn load_tree(path: Option<&Path>) -> Result<Value, CliError> {
    let Some(path) = path else {
        return parse_toml(PAPER_DEFAULTS, "built-in defaults");
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "json") {
        let mut manifest: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return manifest
            .get_mut("resolved_config")
            .map(Value::take)
            .ok_or_else(|| CliError::Usage(format!("{}: no `resolved_config` in manifest", path.display())));
    }
    parse_toml(&text, &path.display().to_string())
}

fn parse_toml(text: &str, origin: &str) -> Result<Value, CliError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Usage(format!("{origin}: {e}")))?;
    serde_json::to_value(table).map_err(|e| CliError::Usage(format!("{origin}: {e}")))
}

/// Parses a `--set` value as a TOML scalar or inline array, falling back to
/// a bare string.
pub fn parse_override_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t
            .remove("v")
            .and_then(|v| serde_json::to_value(v).ok())
            .unwrap_or_else(|| Value::String(raw.to_owned())),
        Err(_) => Value::String(raw.to_owned()),
    }
}

/// Sets `path` (dotted) in `tree`, creating intermediate tables.
pub fn set_path(tree: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("malformed key path `{path}`")));
    }
    let mut node = tree;
    for key in &keys[..keys.len() - 1] {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("`{path}`: `{key}` is not a table")))?;
        node = map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let map = node
        .as_object_mut()
        .ok_or_else(|| CliError::Usage(format!("`{path}`: parent is not a table")))?;
    map.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Applies one `key=value` override.
pub fn apply_set(tree: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{assignment}`")))?;
    set_path(tree, key.trim(), parse_override_value(raw.trim()))
}

/// Strict deserialization; errors carry the dotted path of the bad key.
pub fn resolve(tree: &Value) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // Unknown keys are reported against their parent table; name the
        // key itself.
        let key = inner
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
            .map(|k| if path == "." { k.to_owned() } else { format!("{path}.{k}") });
        match key {
            Some(full) => CliError::Usage(format!("config: unknown key `{full}` ({inner})")),
            None => CliError::Usage(format!("config: `{path}`: {inner}")),
        }
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "config: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}
