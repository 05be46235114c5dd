use std::fmt;
use std::path::Path;

use mucontrol::linalg::Mat;
use mucontrol::lti::{FrequencyGrid, RationalTF, TFMatrix};
use mucontrol::robot::{StateDomain, TwoLink, TwoLinkParams, VertexMode, WeightSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const PAPER_2R: &str = include_str!("../presets/paper2r.toml");

/// Validation failure with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub robot: RobotConfig,
    #[serde(default)]
    pub plant: PlantConfig,
    pub weights: WeightSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub verification: VerificationConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    #[serde(default = "zero_damping")]
    pub damping: Vec<Vec<f64>>,
    pub q: Vec<[f64; 2]>,
    pub qdot: Vec<[f64; 2]>,
}

fn zero_damping() -> Vec<Vec<f64>> {
    vec![vec![0.0; 2]; 2]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalSource {
    /// Published intervals of the 2R example.
    Paper2r,
    /// Sampled Jacobian bounds over the robot domain.
    Computed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub intervals: IntervalSource,
    pub density: usize,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { intervals: IntervalSource::Computed, density: 41 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { lo: 1e-3, hi: 1e4, points: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisMode {
    Unstructured,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisConfig {
    pub mode: SynthesisMode,
    /// Fixed-structure entry degrees.
    pub num_degree: usize,
    pub den_degree: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub dfit_order: usize,
    pub starts: usize,
    pub max_evals: usize,
    pub rounds: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            mode: SynthesisMode::Unstructured,
            num_degree: 2,
            den_degree: 3,
            max_iter: 30,
            tol: 1e-3,
            dfit_order: 2,
            starts: 8,
            max_evals: 3000,
            rounds: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexChoice {
    Full,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationConfig {
    pub monte_carlo: usize,
    pub vertices: VertexChoice,
    /// Vertex count in sampled mode.
    pub vertex_samples: usize,
    /// Relative slack on the weight templates.
    pub slack: f64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self { monte_carlo: 20, vertices: VertexChoice::Full, vertex_samples: 256, slack: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Step reference in rad; all zeros gives a regulation run.
    pub step: Vec<f64>,
    pub check_dt_halving: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { t_end: 10.0, dt: 1e-3, step: vec![0.1, 0.0], check_dt_halving: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub entries: Vec<EntryConfig>,
}

/// One entry of a rational controller, 1-based indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub row: usize,
    pub col: usize,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::new("", format!("parse error: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "paper2r" => Self::from_toml(PAPER_2R),
            other => Err(ConfigError::new("--preset", format!("unknown preset '{other}' (available: paper2r)"))),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical dump.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.robot()?;
        self.weights.validate(false).map_err(|e| ConfigError::new("weights", e))?;
        if self.weights.channels() != 2 {
            return Err(ConfigError::new("weights", "the two-link model needs two channels"));
        }
        self.grid()?;
        if self.plant.density < 2 {
            return Err(ConfigError::new("plant.density", "must be at least 2"));
        }
        let s = &self.synthesis;
        if s.max_iter == 0 {
            return Err(ConfigError::new("synthesis.max_iter", "must be positive"));
        }
        if !(s.tol > 0.0) {
            return Err(ConfigError::new("synthesis.tol", "must be positive"));
        }
        if s.dfit_order > mucontrol::mu::MAX_DFIT_ORDER {
            return Err(ConfigError::new("synthesis.dfit_order", format!("at most {}", mucontrol::mu::MAX_DFIT_ORDER)));
        }
        if s.num_degree > s.den_degree {
            return Err(ConfigError::new("synthesis.num_degree", "must not exceed den_degree"));
        }
        if s.starts == 0 || s.rounds == 0 || s.max_evals == 0 {
            return Err(ConfigError::new("synthesis", "starts, rounds and max_evals must be positive"));
        }
        let v = &self.verification;
        if !(v.slack >= 0.0) {
            return Err(ConfigError::new("verification.slack", "must be non-negative"));
        }
        if v.vertices == VertexChoice::Sampled && v.vertex_samples == 0 {
            return Err(ConfigError::new("verification.vertex_samples", "must be positive"));
        }
        let sim = &self.simulation;
        if !(sim.t_end > 0.0 && sim.t_end.is_finite()) {
            return Err(ConfigError::new("simulation.t_end", "must be positive"));
        }
        if !(sim.dt > 0.0 && sim.dt <= 1e-3 * sim.t_end) {
            return Err(ConfigError::new("simulation.dt", "must lie in (0, 1e-3 t_end]"));
        }
        if sim.step.len() != 2 || sim.step.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::new("simulation.step", "needs two finite values"));
        }
        if self.controller.is_some() {
            self.controller_tf()?;
        }
        Ok(())
    }

    pub fn robot(&self) -> Result<TwoLink, ConfigError> {
        let r = &self.robot;
        let params = TwoLinkParams { a1: r.a1, a2: r.a2, a3: r.a3 };
        params.validate().map_err(|e| ConfigError::new("robot", e))?;
        if r.damping.len() != 2 || r.damping.iter().any(|row| row.len() != 2) {
            return Err(ConfigError::new("robot.damping", "must be 2x2"));
        }
        let damping = Mat::from_fn(2, 2, |i, j| r.damping[i][j]);
        let pair = |v: &[[f64; 2]]| v.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>();
        let domain = StateDomain::new(pair(&r.q), pair(&r.qdot)).map_err(|e| ConfigError::new("robot.q/qdot", e))?;
        TwoLink::new(params, damping, domain).map_err(|e| ConfigError::new("robot", e))
    }

    pub fn grid(&self) -> Result<FrequencyGrid, ConfigError> {
        FrequencyGrid::logspace(self.grid.lo, self.grid.hi, self.grid.points).map_err(|e| ConfigError::new("grid", e))
    }

    pub fn vertex_mode(&self) -> VertexMode {
        match self.verification.vertices {
            VertexChoice::Full => VertexMode::Full,
            VertexChoice::Sampled => VertexMode::Sampled { k: self.verification.vertex_samples, seed: self.seed },
        }
    }

    /// The in-config rational controller.
    pub fn controller_tf(&self) -> Result<TFMatrix, ConfigError> {
        let Some(c) = &self.controller else {
            return Err(ConfigError::new("controller", "no controller given (use --controller or a [controller] section)"));
        };
        entries_to_tf(&c.entries).map_err(|(i, m)| ConfigError::new(format!("controller.entries[{i}]"), m))
    }
}

/// Assembles a transfer matrix from 1-based entries; missing entries are
/// zero. Errors carry the entry index.
pub fn entries_to_tf(entries: &[EntryConfig]) -> Result<TFMatrix, (usize, String)> {
    let rows = entries.iter().map(|e| e.row).max().unwrap_or(0);
    let cols = entries.iter().map(|e| e.col).max().unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err((0, "controller has no entries".into()));
    }
    let mut m = vec![vec![RationalTF::constant(0.0); cols]; rows];
    let mut seen = vec![vec![false; cols]; rows];
    for (i, e) in entries.iter().enumerate() {
        if e.row == 0 || e.col == 0 {
            return Err((i, "row and col are 1-based".into()));
        }
        if std::mem::replace(&mut seen[e.row - 1][e.col - 1], true) {
            return Err((i, format!("duplicate entry ({}, {})", e.row, e.col)));
        }
        m[e.row - 1][e.col - 1] = RationalTF::new(e.num.clone(), e.den.clone()).map_err(|err| (i, err.to_string()))?;
    }
    TFMatrix::new(m).map_err(|e| (0, e.to_string()))
}
