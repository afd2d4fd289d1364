//! Scenario configuration files (TOML) and their per-scenario validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AliasPolicy, Field, Frame, GridSpec};
use crate::initial::Gaussian;
use crate::snapshot;
use crate::solver::{ground_state_1d, ground_state_numeric, Coupling, EquationSpec, GroundStateOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    LensCheck,
    PcCheck,
    MehlerCheck,
    Soliton,
    Scatter,
    Frames,
    Whitney,
    Concentrate,
    Sweep,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::LensCheck,
        ScenarioKind::PcCheck,
        ScenarioKind::MehlerCheck,
        ScenarioKind::Soliton,
        ScenarioKind::Scatter,
        ScenarioKind::Frames,
        ScenarioKind::Whitney,
        ScenarioKind::Concentrate,
        ScenarioKind::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::LensCheck => "lens-check",
            ScenarioKind::PcCheck => "pc-check",
            ScenarioKind::MehlerCheck => "mehler-check",
            ScenarioKind::Soliton => "soliton",
            ScenarioKind::Scatter => "scatter",
            ScenarioKind::Frames => "frames",
            ScenarioKind::Whitney => "whitney",
            ScenarioKind::Concentrate => "concentrate",
            ScenarioKind::Sweep => "sweep",
        }
    }

    /// The shipped configuration for this scenario.
    pub fn default_config_text(self) -> &'static str {
        match self {
            ScenarioKind::LensCheck => include_str!("../../configs/lens-check.toml"),
            ScenarioKind::PcCheck => include_str!("../../configs/pc-check.toml"),
            ScenarioKind::MehlerCheck => include_str!("../../configs/mehler-check.toml"),
            ScenarioKind::Soliton => include_str!("../../configs/soliton.toml"),
            ScenarioKind::Scatter => include_str!("../../configs/scatter.toml"),
            ScenarioKind::Frames => include_str!("../../configs/frames.toml"),
            ScenarioKind::Whitney => include_str!("../../configs/whitney.toml"),
            ScenarioKind::Concentrate => include_str!("../../configs/concentrate.toml"),
            ScenarioKind::Sweep => include_str!("../../configs/sweep.toml"),
        }
    }

    /// Threshold names the scenario accepts, with their default values.
    pub fn default_thresholds(self) -> &'static [(&'static str, f64)] {
        match self {
            ScenarioKind::LensCheck => &[
                ("discrepancy", 1e-4),
                ("linear_discrepancy", 1e-7),
                ("order_ratio_slack", 0.2),
                ("round_trip", 1e-7),
                ("mass", 1e-8),
            ],
            ScenarioKind::PcCheck => &[
                ("involution", 1e-6),
                ("mass", 1e-8),
                ("conjugation", 1e-5),
                ("decomposition", 1e-5),
            ],
            ScenarioKind::MehlerCheck => &[
                ("quadrature", 1e-6),
                ("period", 1e-6),
                ("quarter_period", 1e-6),
                ("hermite", 1e-6),
            ],
            ScenarioKind::Soliton => &[
                ("ground_state_residual", 1e-9),
                ("relative_error", 1e-4),
                ("growth_fit", 0.02),
                ("mass", 1e-9),
            ],
            ScenarioKind::Scatter => &[("cauchy", 1e-3), ("linear_endpoint", 1e-6)],
            ScenarioKind::Frames => &[("invariance", 1e-3), ("order_ratio_slack", 0.2)],
            ScenarioKind::Whitney => &[
                ("parseval", 1e-12),
                ("reconstruction", 1e-8),
                ("elementary", 1e-10),
            ],
            ScenarioKind::Concentrate => &[("clean", 0.99), ("noisy", 0.9), ("noise_control", 0.2)],
            ScenarioKind::Sweep => &[],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub p: f64,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    /// `A e^{-|x-c|²/(2w²)} e^{iv·x}`; give either `amplitude` or `mass`.
    Gaussian {
        amplitude: Option<f64>,
        mass: Option<f64>,
        width: f64,
        center: Option<Vec<f64>>,
        velocity: Option<Vec<f64>>,
    },
    /// The ground state of `½ΔQ + Q^p = Q`.
    Soliton,
    /// An LLAB snapshot on the configured grid.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Lens-frame end time; physical windows end at `tan τ`.
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    /// Steps per evolution window (fixed-step scenarios).
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    /// Slices per window kept for norms and snapshots.
    pub slices: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub snapshots: bool,
    pub diagnostics: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            snapshots: true,
            diagnostics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub masses: Vec<f64>,
    #[serde(default = "unit")]
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub plants: usize,
    /// Noise amplitude relative to the unit-mass atom.
    pub noise: f64,
    pub noise_controls: usize,
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhitneyConfig {
    /// Side of the exhaustively checked 1-D lattice.
    pub lattice_1d: i64,
    /// Side of the exhaustively checked 2-D lattice.
    pub lattice_2d: i64,
    /// Random `Ω` sets per `(s, p)` pair.
    pub omega_sets: usize,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strict_aliasing: bool,
    pub grid: GridConfig,
    pub equation: Option<EquationConfig>,
    pub initial: Option<InitialConfig>,
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub steps: StepConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    pub battery: Option<BatteryConfig>,
    pub search: Option<SearchConfig>,
    pub whitney: Option<WhitneyConfig>,
}

impl ScenarioConfig {
    /// Parses and validates a configuration.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn default_for(kind: ScenarioKind) -> Self {
        Self::from_toml(kind.default_config_text()).expect("shipped configurations are valid")
    }

    fn missing(&self, field: &str) -> Error {
        Error::Config(format!(
            "missing field `{field}` (required by scenario `{}`)",
            self.scenario
        ))
    }

    fn invalid(&self, msg: impl fmt::Display) -> Error {
        Error::Config(format!("scenario `{}`: {msg}", self.scenario))
    }

    /// Checks the per-scenario schema: required sections, preconditions on
    /// the equation and known threshold names.
    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.grid.d, self.grid.n, self.grid.length).map_err(|e| self.invalid(e))?;
        let known = self.scenario.default_thresholds();
        for (name, value) in &self.thresholds {
            if !known.iter().any(|(k, _)| k == name) {
                return Err(self.invalid(format!("unknown threshold `{name}`")));
            }
            if !(value.is_finite() && *value >= 0.0) {
                return Err(self.invalid(format!("threshold `{name}` = {value}")));
            }
        }
        let d = self.grid.d as f64;
        use ScenarioKind::*;
        let needs: &[&str] = match self.scenario {
            LensCheck => &["equation", "initial", "time"],
            PcCheck => &["equation", "initial"],
            Scatter => &["equation", "initial"],
            Frames => &["equation", "initial", "time", "battery"],
            Sweep => &["equation", "time", "battery"],
            Soliton => &["time"],
            MehlerCheck | Whitney | Concentrate => &[],
        };
        for &field in needs {
            let present = match field {
                "equation" => self.equation.is_some(),
                "initial" => self.initial.is_some(),
                "time" => self.time.is_some(),
                "battery" => self.battery.is_some(),
                _ => true,
            };
            if !present {
                return Err(self.missing(field));
            }
        }
        if let Some(eq) = &self.equation {
            EquationSpec::new(eq.p, eq.coupling, Frame::Physical, self.grid.d).map_err(|e| self.invalid(e))?;
            let critical = EquationSpec::critical_power(self.grid.d);
            match self.scenario {
                LensCheck | Scatter if eq.p <= 1.0 + 2.0 / d => {
                    return Err(self.invalid(format!("needs p > 1 + 2/d, got p = {}", eq.p)));
                }
                PcCheck | Frames if (eq.p - critical).abs() > 1e-12 => {
                    return Err(self.invalid(format!("needs p = 1 + 4/d = {critical}, got {}", eq.p)));
                }
                Scatter if eq.coupling != Coupling::Defocusing => {
                    return Err(self.invalid("needs defocusing coupling"));
                }
                Soliton if !(eq.p == 5.0 && eq.coupling == Coupling::Focusing) => {
                    return Err(self.invalid("runs the focusing quintic equation only"));
                }
                _ => {}
            }
            EquationSpec::new(eq.p, eq.coupling, Frame::Lens, self.grid.d).map_err(|e| self.invalid(e))?;
        }
        if self.scenario == Soliton && self.grid.d != 1 {
            return Err(self.invalid("needs d = 1"));
        }
        if let Some(t) = &self.time {
            if !(t.tau.is_finite() && t.tau > 0.0) {
                return Err(self.invalid(format!("time.tau = {}", t.tau)));
            }
        }
        if let Some(dt) = self.steps.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(self.invalid(format!("steps.dt = {dt}")));
            }
        }
        if self.steps.steps == Some(0) {
            return Err(self.invalid("steps.steps must be positive"));
        }
        if matches!(self.steps.slices, Some(s) if s < 2) {
            return Err(self.invalid("steps.slices must be at least 2"));
        }
        if let Some(b) = &self.battery {
            if b.masses.is_empty() || b.masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                return Err(self.invalid("battery.masses must be positive and non-empty"));
            }
            if !(b.width > 0.0) {
                return Err(self.invalid(format!("battery.width = {}", b.width)));
            }
        }
        if let Some(InitialConfig::Gaussian {
            amplitude,
            mass,
            width,
            center,
            velocity,
        }) = &self.initial
        {
            if amplitude.is_some() == mass.is_some() {
                return Err(self.invalid("gaussian initial data needs exactly one of `amplitude`, `mass`"));
            }
            if !(*width > 0.0) {
                return Err(self.invalid(format!("gaussian width {width}")));
            }
            for v in [center, velocity].into_iter().flatten() {
                if v.len() != self.grid.d {
                    return Err(self.invalid(format!("gaussian vectors need {} components", self.grid.d)));
                }
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.grid.d, self.grid.n, self.grid.length).expect("validated grid")
    }

    pub fn policy(&self) -> AliasPolicy {
        if self.strict_aliasing {
            AliasPolicy::strict()
        } else {
            AliasPolicy::default()
        }
    }

    /// The configured threshold or the scenario default.
    pub fn threshold(&self, name: &str) -> f64 {
        self.thresholds.get(name).copied().unwrap_or_else(|| {
            self.scenario
                .default_thresholds()
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no default threshold `{name}` for {}", self.scenario))
        })
    }

    pub fn tau(&self) -> f64 {
        self.time.map_or(0.0, |t| t.tau)
    }

    pub fn equation(&self, frame: Frame) -> Result<EquationSpec> {
        let eq = self.equation.ok_or_else(|| self.missing("equation"))?;
        EquationSpec::new(eq.p, eq.coupling, frame, self.grid.d)
    }

    /// Initial data at `t = 0` in the given frame.
    pub fn initial_field(&self, frame: Frame) -> Result<Field> {
        let grid = self.grid_spec();
        let init = self.initial.as_ref().ok_or_else(|| self.missing("initial"))?;
        let field = match init {
            InitialConfig::Gaussian {
                amplitude,
                mass,
                width,
                center,
                velocity,
            } => {
                let d = grid.dim();
                let mut g = match (amplitude, mass) {
                    (Some(a), _) => Gaussian {
                        amplitude: *a,
                        width: *width,
                        center: vec![0.0; d],
                        velocity: vec![0.0; d],
                    },
                    (None, m) => Gaussian::with_mass(d, *width, m.unwrap_or(1.0)),
                };
                if let Some(c) = center {
                    g.center = c.clone();
                }
                if let Some(v) = velocity {
                    g.velocity = v.clone();
                }
                g.sample(grid, 0.0, Frame::Physical)?
            }
            InitialConfig::Soliton => {
                let p = self.equation.map_or(5.0, |e| e.p);
                if grid.dim() == 1 && p == 5.0 {
                    ground_state_1d(grid)?
                } else {
                    ground_state_numeric(grid, p, &GroundStateOptions::default())?
                }
            }
            InitialConfig::File { path } => {
                let f = snapshot::load(path)?;
                if f.grid() != &grid {
                    return Err(self.invalid(format!(
                        "snapshot {} is on a different grid than [grid]",
                        path.display()
                    )));
                }
                f.in_frame(Frame::Physical).at_time(0.0)
            }
        };
        Ok(field.in_frame(frame))
    }
}
