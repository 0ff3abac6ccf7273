//! Run configuration: one TOML file, physical inputs in MHz, um, us and K.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rydchain::evolution::{ModelKind, Observable, PeakOptions};
use rydchain::inversion::{MappingMode, SolveOptions};
use rydchain::params::{bessel_core_intensity, load_param_table, HardwareConstraints, ParamError, ParamTable};
use rydchain::sweeps::{DetuningGrid, SweepOptions};
use rydchain::units::mhz;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Params(#[from] ParamError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hardware {
    pub dx_min_um: f64,
    pub power_er_w: f64,
    pub core_radius_um: f64,
    /// Fraction of the power in the central core.
    pub core_fraction: f64,
    pub delta_ge_mhz: f64,
    /// Effective Rabi frequency at the table's reference n.
    pub omega_anchor_mhz: f64,
    /// Derive the Rabi frequency from the beam intensity instead of the anchor.
    pub rabi_from_intensity: bool,
}

impl Default for Hardware {
    fn default() -> Self {
        Self {
            dx_min_um: 3.0,
            power_er_w: 4.0,
            core_radius_um: 10.0,
            core_fraction: 0.1,
            delta_ge_mhz: 1.0e7,
            omega_anchor_mhz: 6.0,
            rabi_from_intensity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub tol: f64,
    pub max_iter: usize,
    pub mapping: MappingMode,
    pub perturbative_ratio: f64,
}

impl Default for Solver {
    fn default() -> Self {
        let s = SolveOptions::default();
        Self { tol: s.tol, max_iter: s.max_iter, mapping: s.mode, perturbative_ratio: s.perturbative_ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Evolution {
    /// Excitation cap for the Rydberg models.
    pub m_max: usize,
    pub observable: Observable,
    /// Relative half-width of the peak search window around t_pi.
    pub window: f64,
    pub points: usize,
    /// Add the intermediate-state admixture to the decay rate.
    pub admixture: bool,
    /// Optima whose `|p(mMax) - p(mMax + 1)|` exceeds this are flagged non-converged.
    pub truncation_tol: f64,
}

impl Default for Evolution {
    fn default() -> Self {
        let p = PeakOptions::default();
        Self {
            m_max: 3,
            observable: p.observable,
            window: p.window,
            points: p.points,
            admixture: false,
            truncation_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GridScale {
    /// Multiples of the Rabi frequency.
    Omega,
    /// Multiples of the nearest-neighbour blockade at dx_min.
    Vmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Detuning {
    pub scale: GridScale,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Explicit |delta0| values in MHz; overrides the log grid when non-empty.
    pub values_mhz: Vec<f64>,
    pub refine_points: usize,
}

impl Default for Detuning {
    fn default() -> Self {
        Self { scale: GridScale::Omega, lo: 4.0, hi: 60.0, points: 24, values_mhz: vec![], refine_points: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub models: Vec<ModelKind>,
    pub n: u32,
    pub l: usize,
    pub theta_k: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub l_min: usize,
    pub l_max: usize,
    /// n window of the joint length scan.
    pub length_n_min: u32,
    pub length_n_max: u32,
    pub length_model: ModelKind,
    pub thetas_k: Vec<f64>,
    pub fit_l_min: usize,
    pub detuning: Detuning,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            models: vec![ModelKind::XxNn, ModelKind::RydNn, ModelKind::RydLri],
            n: 70,
            l: 16,
            theta_k: 300.0,
            n_min: 50,
            n_max: 80,
            l_min: 8,
            l_max: 20,
            length_n_min: 62,
            length_n_max: 80,
            length_model: ModelKind::RydLri,
            thetas_k: vec![300.0, 4.0],
            fit_l_min: 8,
            detuning: Detuning::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    /// CSV table; the shipped table when absent.
    pub param_table: Option<PathBuf>,
    /// Fill n outside the table from power laws.
    pub param_fallback: bool,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub hardware: Hardware,
    pub solver: Solver,
    pub evolution: Evolution,
    pub sweep: Sweep,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            param_table: None,
            param_fallback: false,
            output_dir: PathBuf::from("out"),
            workers: 0,
            hardware: Hardware::default(),
            solver: Solver::default(),
            evolution: Evolution::default(),
            sweep: Sweep::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut c = Self::from_toml(&text)?;
        // table paths are relative to the config file
        if let (Some(t), Some(dir)) = (&c.param_table, path.parent()) {
            if t.is_relative() {
                c.param_table = Some(dir.join(t));
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        self.hardware()?.validate()?;
        let s = &self.sweep;
        let d = &s.detuning;
        if d.values_mhz.is_empty() {
            if !(d.lo > 0.0 && d.hi > d.lo) || d.points < 2 {
                return invalid("detuning grid needs 0 < lo < hi and at least 2 points");
            }
        } else if d.values_mhz.iter().any(|v| !(v.is_finite() && *v != 0.0)) {
            return invalid("detuning values must be finite and non-zero");
        }
        if s.models.is_empty() {
            return invalid("sweep.models is empty");
        }
        if s.n_min > s.n_max || s.length_n_min > s.length_n_max {
            return invalid("n range is inverted");
        }
        if s.l < 2 || s.l_min < 2 || s.l_min > s.l_max {
            return invalid("chain lengths must be >= 2 with l_min <= l_max");
        }
        if s.l.max(s.l_max) > rydchain::basis::MAX_SITES {
            return invalid(format!("chain length above {}", rydchain::basis::MAX_SITES));
        }
        if s.thetas_k.is_empty() || s.thetas_k.iter().chain([&s.theta_k]).any(|t| !(*t >= 0.0)) {
            return invalid("temperatures must be non-negative and thetas_k non-empty");
        }
        let e = &self.evolution;
        if e.m_max == 0 {
            return invalid("evolution.m_max must be at least 1");
        }
        if !(e.truncation_tol > 0.0) {
            return invalid("evolution.truncation_tol must be positive");
        }
        if !(e.window > 0.0 && e.window < 1.0) || e.points < 3 {
            return invalid("evolution.window must lie in (0, 1) and points >= 3");
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return invalid("solver.tol must be positive and max_iter non-zero");
        }
        Ok(())
    }

    pub fn hardware(&self) -> Result<HardwareConstraints, ConfigError> {
        let h = &self.hardware;
        if !(h.core_fraction > 0.0 && h.core_fraction <= 1.0) {
            return invalid("hardware.core_fraction must lie in (0, 1]");
        }
        Ok(HardwareConstraints {
            dx_min: h.dx_min_um,
            power_er: h.power_er_w,
            intensity: bessel_core_intensity(h.power_er_w, h.core_radius_um, h.core_fraction),
            core_radius: h.core_radius_um,
            delta_ge: mhz(h.delta_ge_mhz),
            omega_anchor: if h.rabi_from_intensity { None } else { Some(mhz(h.omega_anchor_mhz)) },
        })
    }

    pub fn table(&self) -> Result<ParamTable, ConfigError> {
        let t = match &self.param_table {
            Some(p) => load_param_table(p)?,
            None => ParamTable::builtin(),
        };
        Ok(t.with_fallback(self.param_fallback))
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            mode: self.solver.mapping,
            perturbative_ratio: self.solver.perturbative_ratio,
        }
    }

    pub fn peak_options(&self) -> PeakOptions {
        PeakOptions {
            window: self.evolution.window,
            points: self.evolution.points,
            observable: self.evolution.observable,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        let d = &self.sweep.detuning;
        let grid = if !d.values_mhz.is_empty() {
            DetuningGrid::Explicit { values: d.values_mhz.iter().map(|v| -mhz(v.abs())).collect() }
        } else {
            match d.scale {
                GridScale::Omega => DetuningGrid::OmegaRelative { lo: d.lo, hi: d.hi, points: d.points },
                GridScale::Vmax => DetuningGrid::VmaxRelative { lo: d.lo, hi: d.hi, points: d.points },
            }
        };
        SweepOptions {
            grid,
            refine_points: d.refine_points,
            solve: self.solve_options(),
            peak: self.peak_options(),
            m_max: Some(self.evolution.m_max),
            admixture: self.evolution.admixture,
            truncation_tol: self.evolution.truncation_tol,
        }
    }

    /// SHA-256 over the canonical JSON form, so formatting and key order do not matter.
    pub fn hash(&self, extra: &serde_json::Value) -> String {
        let v = serde_json::json!({ "config": self, "args": extra });
        hex::encode(Sha256::digest(serde_json::to_vec(&v).expect("config serializes")))
    }
}
