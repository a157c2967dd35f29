//! TOML scenario configuration with dotted-key overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lindblad::{two_stage_grid, uniform_grid, SimulationParams};
use crate::wigner::GridSpec;

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    TwoCat,
    Sweep,
    FourCat,
    Stationary,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::TwoCat => "two-cat",
            ScenarioKind::Sweep => "sweep",
            ScenarioKind::FourCat => "four-cat",
            ScenarioKind::Stationary => "stationary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub n_atoms: usize,
    pub n_bar: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub cat: CatConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub four_cat: FourCatConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}

/// Two-component cat `|β₁, φ₁⟩ + |β₂, φ₂⟩`, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatConfig {
    pub beta1: f64,
    #[serde(default)]
    pub phi1: f64,
    pub beta2: f64,
    #[serde(default)]
    pub phi2: f64,
    /// Also evolve the classical mixture and report `distance_evolved`.
    #[serde(default)]
    pub track_evolved: bool,
}

impl Default for CatConfig {
    fn default() -> Self {
        Self {
            beta1: PI / 2.0,
            phi1: 0.0,
            beta2: 0.0,
            phi2: 0.0,
            track_evolved: false,
        }
    }
}

/// `n_cells × n_cells` grid over `[beta_min, beta_max]²`, cell centres inset
/// by half a step from the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_cells: usize,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_cells: 25,
            beta_min: 0.0,
            beta_max: PI,
        }
    }
}

impl SweepConfig {
    pub fn betas(&self) -> Vec<f64> {
        let step = (self.beta_max - self.beta_min) / self.n_cells as f64;
        (0..self.n_cells)
            .map(|i| self.beta_min + (i as f64 + 0.5) * step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourCatConfig {
    pub snapshots: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for FourCatConfig {
    fn default() -> Self {
        Self {
            snapshots: vec![0.0, 0.015, 0.04],
            n_theta: 181,
            n_phi: 181,
        }
    }
}

impl FourCatConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec::Uniform {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum InitialState {
    Ground,
    Excited,
    Stationary,
    Coherent { beta: f64, phi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub initial: InitialState,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            initial: InitialState::Excited,
        }
    }
}

/// Sampling: uniform `output_stride` on `[0, t_max]`, optionally preceded by
/// a finer stride up to `fine_until`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_max: f64,
    pub output_stride: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_stride: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_until: Option<f64>,
}

impl TimeConfig {
    pub fn grid(&self) -> Vec<f64> {
        match (self.fine_stride, self.fine_until) {
            (Some(fs), Some(fu)) => two_stage_grid(fs, fu, self.output_stride, self.t_max),
            _ => uniform_grid(self.t_max, self.output_stride),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let p = SimulationParams::default();
        Self {
            rel_tol: p.rel_tol,
            abs_tol: p.abs_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            workers: 1,
        }
    }
}

fn config_error(field: &str, msg: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Config(format!("{field}: {msg}"))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides (dotted keys, TOML
    /// values, bare words taken as strings) and validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ScenarioError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ScenarioError::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: ScenarioConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ScenarioError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn simulation_params(&self) -> SimulationParams {
        SimulationParams {
            gamma: self.gamma,
            n_bar: self.n_bar,
            rel_tol: self.integrator.rel_tol,
            abs_tol: self.integrator.abs_tol,
            t_max: self.time.t_max,
            output_stride: self.time.output_stride,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config_error(field, format!("must be positive, got {v}")))
            }
        };
        let beta = |field: &str, v: f64| {
            if (0.0..PI).contains(&v) {
                Ok(())
            } else {
                Err(config_error(field, format!("must lie in [0, π), got {v}")))
            }
        };
        if self.n_atoms == 0 {
            return Err(config_error("n_atoms", "must be at least 1"));
        }
        if !(self.n_bar.is_finite() && self.n_bar >= 0.0) {
            return Err(config_error("n_bar", format!("must be ≥ 0, got {}", self.n_bar)));
        }
        positive("gamma", self.gamma)?;
        positive("time.t_max", self.time.t_max)?;
        positive("time.output_stride", self.time.output_stride)?;
        match (self.time.fine_stride, self.time.fine_until) {
            (None, None) => {}
            (Some(fs), Some(fu)) => {
                positive("time.fine_stride", fs)?;
                positive("time.fine_until", fu)?;
            }
            _ => {
                return Err(config_error(
                    "time",
                    "fine_stride and fine_until must be given together",
                ))
            }
        }
        positive("integrator.rel_tol", self.integrator.rel_tol)?;
        positive("integrator.abs_tol", self.integrator.abs_tol)?;
        if self.output.workers == 0 {
            return Err(config_error("output.workers", "must be at least 1"));
        }
        match self.scenario {
            ScenarioKind::TwoCat => {
                beta("cat.beta1", self.cat.beta1)?;
                beta("cat.beta2", self.cat.beta2)?;
            }
            ScenarioKind::Sweep => {
                if self.sweep.n_cells == 0 {
                    return Err(config_error("sweep.n_cells", "must be at least 1"));
                }
                if !(0.0 <= self.sweep.beta_min && self.sweep.beta_min < self.sweep.beta_max && self.sweep.beta_max <= PI) {
                    return Err(config_error(
                        "sweep",
                        "need 0 ≤ beta_min < beta_max ≤ π",
                    ));
                }
            }
            ScenarioKind::FourCat => {
                let fc = &self.four_cat;
                if fc.snapshots.is_empty() {
                    return Err(config_error("four_cat.snapshots", "must not be empty"));
                }
                if fc.snapshots.iter().any(|&t| !(0.0..=self.time.t_max).contains(&t)) {
                    return Err(config_error("four_cat.snapshots", "times must lie in [0, time.t_max]"));
                }
                if fc.snapshots.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_error("four_cat.snapshots", "must be strictly increasing"));
                }
                if fc.n_theta < 2 || fc.n_phi < 1 {
                    return Err(config_error("four_cat", "grid needs n_theta ≥ 2 and n_phi ≥ 1"));
                }
            }
            ScenarioKind::Stationary => {
                if let InitialState::Coherent { beta: b, .. } = self.stationary.initial {
                    beta("stationary.initial.beta", b)?;
                }
            }
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ScenarioError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ScenarioError::Config(format!("override `{spec}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ScenarioError::Config(format!("override key `{key}` is malformed")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ScenarioError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}
