//! TOML experiment configuration.
//!
//! ```toml
//! kind = "single"          # single | sweep | acceptance_suite | pct_check | linear_confinement
//! output_dir = "out/run"
//! seed = 7
//!
//! [model]
//! dim = 1
//! alpha = 1.0
//! kappa = [0.0, -1.0]      # [re, im]
//!
//! [grid]
//! box_length = 1024.0
//! points = 4096
//!
//! [solver]
//! dt = 0.01
//! t_end = 40.0
//!
//! [initial]
//! kind = "gaussian"
//! amplitude = [0.1, 0.0]
//! width = 1.0
//! ```
//!
//! Unknown keys anywhere are errors.

use crate::exponents::ModelParams;
use crate::field::{GridSpec, InitialDataSpec};
use crate::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Default limit on the number of runs in one sweep.
pub const DEFAULT_SWEEP_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Single,
    Sweep,
    AcceptanceSuite,
    PctCheck,
    LinearConfinement,
}

/// Box geometry; the dimension comes from the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub box_length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Localized-mass ladder; omitted means no cutoffs, empty means the
    /// default five-point ladder.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub median_radius: bool,
    #[serde(default)]
    pub scatter: bool,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Write snapshots as checkpoint files.
    #[serde(default = "yes")]
    pub checkpoints: bool,
    /// Emit a gnuplot script next to the trace.
    #[serde(default)]
    pub gnuplot: bool,
}

fn yes() -> bool {
    true
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            lambdas: None,
            median_radius: true,
            scatter: false,
            snapshot_times: Vec::new(),
            checkpoints: true,
            gnuplot: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Classification,
    Slope,
    FinalResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub kappa_im: Vec<f64>,
    #[serde(default)]
    pub amplitude: Vec<f64>,
    #[serde(default)]
    pub points: Vec<usize>,
    #[serde(default)]
    pub dt: Vec<f64>,
    #[serde(default = "default_reductions")]
    pub reduction: Vec<Reduction>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_reductions() -> Vec<Reduction> {
    vec![Reduction::Classification, Reduction::Slope, Reduction::FinalResidual]
}

fn default_cap() -> usize {
    DEFAULT_SWEEP_CAP
}

impl SweepSpec {
    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
            && self.kappa_im.is_empty()
            && self.amplitude.is_empty()
            && self.points.is_empty()
            && self.dt.is_empty()
    }

    /// Product of the non-empty axis lengths.
    pub fn total_runs(&self) -> usize {
        [self.alpha.len(), self.kappa_im.len(), self.amplitude.len(), self.points.len(), self.dt.len()]
            .iter()
            .filter(|&&n| n > 0)
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PctConfig {
    pub t_star: f64,
    #[serde(default = "default_pct_tolerance")]
    pub tolerance: f64,
}

fn default_pct_tolerance() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfinementConfig {
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConfig {
    #[serde(default)]
    pub filter: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub model: Option<ModelParams>,
    pub grid: Option<GridConfig>,
    pub solver: Option<SolverConfig>,
    pub initial: Option<InitialDataSpec>,
    #[serde(default)]
    pub probes: ProbeConfig,
    pub sweep: Option<SweepSpec>,
    pub pct: Option<PctConfig>,
    pub confinement: Option<ConfinementConfig>,
    pub acceptance: Option<AcceptanceConfig>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

/// The pieces every simulation-type experiment needs.
#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub model: ModelParams,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub initial: InitialDataSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    fn require<'a, T>(field: &'static str, v: &'a Option<T>) -> Result<&'a T, ConfigError> {
        v.as_ref().ok_or_else(|| invalid(field, "required for this experiment kind"))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.kind {
            ExperimentKind::AcceptanceSuite => return Ok(()),
            ExperimentKind::Sweep => {
                let sweep = Self::require("sweep", &self.sweep)?;
                if sweep.is_empty() {
                    return Err(invalid("sweep", "at least one axis must be non-empty"));
                }
                if sweep.total_runs() > sweep.cap {
                    return Err(invalid("sweep", format!("{} runs exceed the cap of {}", sweep.total_runs(), sweep.cap)));
                }
            }
            ExperimentKind::PctCheck => {
                let pct = Self::require("pct", &self.pct)?;
                if !(0.0..1.0).contains(&pct.t_star) {
                    return Err(invalid("pct.t_star", "must lie in [0, 1)"));
                }
            }
            ExperimentKind::LinearConfinement => {
                let c = Self::require("confinement", &self.confinement)?;
                if c.times.is_empty() || c.times.iter().any(|&t| !(t >= 0.0)) {
                    return Err(invalid("confinement.times", "need nonnegative times"));
                }
            }
            ExperimentKind::Single => {}
        }
        self.setup().map(|_| ())
    }

    /// Model, grid, solver and initial data, validated together.
    pub fn setup(&self) -> Result<SimulationSetup, ConfigError> {
        let model = *Self::require("model", &self.model)?;
        model.validate().map_err(|e| invalid("model", e.to_string()))?;
        let g = Self::require("grid", &self.grid)?;
        let grid = GridSpec::new(model.dim, g.box_length, g.points).map_err(|e| invalid("grid", e.to_string()))?;
        let initial = Self::require("initial", &self.initial)?.clone();
        let solver = match (&self.solver, self.kind) {
            (Some(s), _) => s.clone(),
            // the free-flow check never steps
            (None, ExperimentKind::LinearConfinement) => SolverConfig::new(1.0, 1.0),
            (None, _) => return Err(invalid("solver", "required for this experiment kind")),
        };
        solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        Ok(SimulationSetup { model, grid, solver, initial })
    }
}
