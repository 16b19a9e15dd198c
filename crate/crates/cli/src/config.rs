//! Run configuration: a TOML file layered over the experiment's preset.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdsmat::propagation::Method;
use tdsmat::smatrix::{CircuitMode, Window};

use crate::error::CliError;
use crate::presets;

/// Overrides `output_dir` when set.
pub const OUT_DIR_ENV: &str = "TDSMAT_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Well1d,
    H3,
    FreeIdentity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Well1d => "well1d",
            Experiment::H3 => "h3",
            Experiment::FreeIdentity => "free-identity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Classical,
    Statevector,
    Sampled,
}

/// Classical correlation scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Propagate Ψ₊ over the whole horizon against a fixed Ψ₋.
    Forward,
    /// Propagate Ψ₊ forward and Ψ₋ backward by half the time each.
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitSystemName {
    Nuclear,
    Atomic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points per axis; a power of two.
    pub n: usize,
    pub x_min: f64,
    /// Extent per axis.
    pub length: f64,
    /// Outer fraction of each axis watched for boundary breaches.
    pub edge_fraction: f64,
}

impl GridConfig {
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    /// Centre in the channel's translational coordinate.
    pub x0: f64,
    /// Position-space width Δ.
    pub width: f64,
    /// Mean momentum; its sign sets the direction of travel.
    pub k0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Step; `dt_max` of the full Hamiltonian when absent.
    pub dt: Option<f64>,
    pub order: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollerConfig {
    /// First non-zero asymptotic time of the doubling schedule.
    pub tau: f64,
    pub max_doublings: usize,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowName {
    None,
    CosineTail,
}

impl From<WindowName> for Window {
    fn from(w: WindowName) -> Self {
        match w {
            WindowName::None => Window::None,
            WindowName::CosineTail => Window::CosineTail,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Largest tail/peak ratio of |C| accepted over the last tenth.
    pub decay_tol: f64,
    pub window: WindowName,
}

impl CorrelationConfig {
    pub fn n_points(&self) -> usize {
        (self.horizon / self.dt).round() as usize + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SMatrixConfig {
    pub n_energies: usize,
    /// Half-width of the energy band in packet momentum spreads.
    pub n_sigma: f64,
    /// Validity-mask floor relative to the largest |η₋η₊|.
    pub eta_floor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub mode: CircuitMode,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct H3Config {
    /// Collinear barrier height of the surrogate surface, eV.
    pub barrier_ev: f64,
    /// Tabulated surface in hartree and bohr, replacing the surrogate.
    pub pes_table: Option<PathBuf>,
    /// Potential ceiling, hartree.
    pub v_cap: f64,
    /// Translational distance at which the diatomic slice is taken.
    pub r_large: f64,
    pub n_basis: usize,
    /// Initial vibrational level.
    pub v_in: usize,
    pub product_levels: Vec<usize>,
    /// Scale each product packet's k0 so its centre sits at the
    /// reactant packet's total energy.
    pub match_energy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub backend: Backend,
    pub output_dir: PathBuf,
    pub units: UnitSystemName,
    pub grid: GridConfig,
    pub reactant: PacketConfig,
    pub product: PacketConfig,
    pub propagator: PropagatorConfig,
    pub moller: MollerConfig,
    pub correlation: CorrelationConfig,
    pub smatrix: SMatrixConfig,
    pub circuit: CircuitConfig,
    /// Times at which `|Ψ₊(t)|` is written out.
    pub snapshots: Vec<f64>,
    pub h3: Option<H3Config>,
}

impl RunConfig {
    /// Parses TOML text over the preset named by its `experiment` key.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config("", e.message()))?;
        let exp = user
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| CliError::config("experiment", "missing or not a string"))?;
        let base = presets::by_name(exp).ok_or_else(|| {
            CliError::config("experiment", format!("unknown experiment '{exp}'; expected one of {:?}", presets::NAMES))
        })?;
        let mut merged = toml::Table::try_from(&base).map_err(|e| CliError::config("", e.to_string()))?;
        merge(&mut merged, user);
        serde_path_to_error::deserialize(toml::Value::Table(merged)).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { String::new() } else { path }, e.into_inner().message())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative table paths are taken from the config's directory
        if let (Some(h3), Some(dir)) = (cfg.h3.as_mut(), path.parent()) {
            if let Some(t) = h3.pes_table.as_mut() {
                if t.is_relative() {
                    *t = dir.join(&*t);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

/// Recursive table merge; `over` wins.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
