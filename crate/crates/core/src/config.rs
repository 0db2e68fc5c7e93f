//! JSON configuration for circuits and command-line runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{reduce_to_three_modes, CapacitanceNetwork, JunctionSet, ReducedCircuit};
use crate::error::{Error, Result};
use crate::fit::{FitProblem, Loss, ParameterGroup, SpectroscopyModel};
use crate::hilbert::{Gauge, ResonatorModel};
use crate::noise::NoiseEnvironment;
use crate::solver::{SolverSettings, SweepSettings};

/// Capacitances in fF; `pair` only needs its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitanceConfig {
    pub pair: [[f64; 4]; 4],
    #[serde(default)]
    pub ground: [f64; 4],
    #[serde(default)]
    pub res: [f64; 4],
    #[serde(default)]
    pub drive: [f64; 4],
}

impl CapacitanceConfig {
    pub fn network(&self) -> CapacitanceNetwork {
        let mut net = CapacitanceNetwork::grounded(self.ground);
        for i in 0..4 {
            for j in i + 1..4 {
                net.set_pair(i, j, self.pair[i][j].max(self.pair[j][i]));
            }
        }
        net.res = self.res;
        net.drive = self.drive;
        net
    }
}

/// A circuit given either by its capacitance network or directly by the
/// reduced charging energies. Explicit β values override those derived from
/// a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub junctions_ghz: [f64; 4],
    #[serde(rename = "capacitances_fF", default, skip_serializing_if = "Option::is_none")]
    pub capacitances: Option<CapacitanceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ec_ghz: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub offset_charges: [f64; 3],
    #[serde(default)]
    pub flux_phi0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_res: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_drive: Option<[f64; 3]>,
}

impl CircuitConfig {
    pub fn fitted_device() -> Self {
        let c = ReducedCircuit::fitted_device(0.5);
        Self {
            junctions_ghz: c.junctions.energies(),
            capacitances: None,
            ec_ghz: Some(c.ec),
            offset_charges: c.n_g,
            flux_phi0: c.phi_ext,
            beta_res: c.beta_res,
            beta_drive: c.beta_drive,
        }
    }

    pub fn to_circuit(&self) -> Result<ReducedCircuit> {
        let junctions = JunctionSet::new(self.junctions_ghz)?;
        let mut circuit = match (&self.capacitances, &self.ec_ghz) {
            (Some(caps), None) => reduce_to_three_modes(&caps.network(), junctions, self.offset_charges, self.flux_phi0)?,
            (None, Some(ec)) => ReducedCircuit::new(*ec, junctions, self.offset_charges, self.flux_phi0)?,
            (Some(_), Some(_)) => return Err(Error::invalid("give either capacitances_fF or ec_ghz, not both")),
            (None, None) => return Err(Error::invalid("one of capacitances_fF or ec_ghz is required")),
        };
        if self.beta_res.is_some() {
            circuit.beta_res = self.beta_res;
        }
        if self.beta_drive.is_some() {
            circuit.beta_drive = self.beta_drive;
        }
        Ok(circuit)
    }
}

/// Either explicit values or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            },
        };
        if v.is_empty() {
            return Err(Error::invalid("grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("grid contains a non-finite value"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub n_max: usize,
    /// Largest truncation tried by the convergence ladder.
    pub max_n_max: usize,
    /// Level shift (GHz) accepted between truncations n and n+2.
    pub tol_conv: f64,
    /// Levels computed per point.
    pub levels: usize,
    pub dense_threshold: usize,
    pub tol: f64,
    pub max_matvecs: usize,
    pub seed: u64,
    pub gauge: Gauge,
}

impl Default for BasisConfig {
    fn default() -> Self {
        let s = SweepSettings::default();
        Self {
            n_max: s.n_max,
            max_n_max: s.max_n_max,
            tol_conv: s.tol_conv,
            levels: s.k,
            dense_threshold: s.solver.dense_threshold,
            tol: s.solver.tol,
            max_matvecs: s.solver.max_matvecs,
            seed: s.solver.seed,
            gauge: s.gauge,
        }
    }
}

impl BasisConfig {
    pub fn solver(&self) -> SolverSettings {
        SolverSettings {
            dense_threshold: self.dense_threshold,
            tol: self.tol,
            max_matvecs: self.max_matvecs,
            seed: self.seed,
            ..SolverSettings::default()
        }
    }

    pub fn sweep(&self, workers: usize) -> SweepSettings {
        SweepSettings {
            n_max: self.n_max,
            max_n_max: self.max_n_max,
            tol_conv: self.tol_conv,
            k: self.levels,
            keep_vectors: false,
            gauge: self.gauge,
            workers,
            solver: self.solver(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.max_n_max < self.n_max {
            return Err(Error::invalid("need 1 ≤ n_max ≤ max_n_max"));
        }
        if self.levels < 2 {
            return Err(Error::invalid("at least two levels are needed"));
        }
        if !(self.tol > 0.0 && self.tol_conv > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeSweepConfig {
    /// 1-based mode index.
    pub mode: usize,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSweepConfig {
    pub grid: Grid,
    /// Flux bias of the sweep (Φ0); defaults to the circuit's.
    #[serde(default)]
    pub flux_phi0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepsConfig {
    pub flux: Grid,
    pub charge: ChargeSweepConfig,
    pub alpha: AlphaSweepConfig,
    /// Flux grid of the coherence table.
    pub coherence: Grid,
}

impl Default for SweepsConfig {
    fn default() -> Self {
        Self {
            flux: Grid::Range { start: 0.0, stop: 0.5, points: 51 },
            charge: ChargeSweepConfig { mode: 1, grid: Grid::Range { start: 0.0, stop: 1.0, points: 21 } },
            alpha: AlphaSweepConfig { grid: Grid::Range { start: 0.5, stop: 1.0, points: 11 }, flux_phi0: None },
            coherence: Grid::Range { start: 0.30, stop: 0.50, points: 21 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavefunctionConfig {
    /// Phase grid points per axis.
    pub grid: usize,
    /// Eigenstates exported (0-based, ascending).
    pub levels: usize,
    /// Slice plane: 1-based axis and phase value.
    pub slice_axis: usize,
    pub slice_value: f64,
    /// Also write the full three-dimensional grid.
    pub full_grid: bool,
}

impl Default for WavefunctionConfig {
    fn default() -> Self {
        Self { grid: 32, levels: 2, slice_axis: 3, slice_value: 0.0, full_grid: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Transition dataset CSV, relative to the config file.
    pub dataset: Option<PathBuf>,
    pub groups: Vec<ParameterGroup>,
    pub max_evals: usize,
    pub tol: f64,
    pub x_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub loss: Loss,
    pub model: SpectroscopyModel,
}

impl Default for FitConfig {
    fn default() -> Self {
        let p = FitProblem::default();
        Self {
            dataset: None,
            groups: Vec::new(),
            max_evals: p.max_evals,
            tol: p.tol,
            x_tol: p.x_tol,
            restarts: p.restarts,
            seed: p.seed,
            loss: p.loss,
            model: p.model,
        }
    }
}

impl FitConfig {
    pub fn problem(&self, workers: usize) -> FitProblem {
        FitProblem {
            groups: self.groups.clone(),
            max_evals: self.max_evals,
            tol: self.tol,
            x_tol: self.x_tol,
            restarts: self.restarts,
            seed: self.seed,
            loss: self.loss,
            model: self.model,
            workers,
        }
    }
}

/// One run of the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Inline circuit; takes precedence over `circuit_file`.
    pub circuit: Option<CircuitConfig>,
    /// Circuit JSON, relative to the run config.
    pub circuit_file: Option<PathBuf>,
    pub basis: BasisConfig,
    pub sweeps: SweepsConfig,
    pub noise: NoiseEnvironment,
    pub resonator: Option<ResonatorModel>,
    pub wavefunction: WavefunctionConfig,
    pub fit: FitConfig,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every logical core.
    pub workers: usize,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            circuit: None,
            circuit_file: None,
            basis: BasisConfig::default(),
            sweeps: SweepsConfig::default(),
            noise: NoiseEnvironment::fig6(),
            resonator: Some(ResonatorModel::fitted_device()),
            wavefunction: WavefunctionConfig::default(),
            fit: FitConfig::default(),
            output_dir: PathBuf::from("out"),
            workers: 0,
            base_dir: PathBuf::from("."),
        }
    }
}

fn config_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Config { context: path.display().to_string(), message: message.into() }
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        config_error(path, format!("line {}, column {}: {e}", e.line(), e.column()))
    })
}

pub fn load_circuit_config(path: &Path) -> Result<CircuitConfig> {
    let text = fs::read_to_string(path)?;
    let cfg: CircuitConfig = parse_json(path, &text)?;
    cfg.to_circuit().map_err(|e| config_error(path, e.to_string()))?;
    Ok(cfg)
}

impl RunConfig {
    /// Read and fully validate a run configuration.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: RunConfig = parse_json(path, &text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate().map_err(|e| match e {
            Error::Config { .. } | Error::Io(_) => e,
            other => config_error(path, other.to_string()),
        })?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The circuit: inline, from `circuit_file`, or the fitted device.
    pub fn circuit_config(&self) -> Result<CircuitConfig> {
        match (&self.circuit, &self.circuit_file) {
            (Some(c), _) => Ok(*c),
            (None, Some(f)) => load_circuit_config(&self.resolve(f)),
            (None, None) => Ok(CircuitConfig::fitted_device()),
        }
    }

    pub fn reduced_circuit(&self) -> Result<ReducedCircuit> {
        self.circuit_config()?.to_circuit()
    }

    pub fn validate(&self) -> Result<()> {
        self.reduced_circuit()?;
        self.basis.validate()?;
        for g in [&self.sweeps.flux, &self.sweeps.charge.grid, &self.sweeps.alpha.grid, &self.sweeps.coherence] {
            g.values()?;
        }
        if !(1..=3).contains(&self.sweeps.charge.mode) {
            return Err(Error::invalid(format!("charge sweep mode {} is not 1, 2 or 3", self.sweeps.charge.mode)));
        }
        self.noise.validate()?;
        if let Some(r) = &self.resonator {
            ResonatorModel::new(r.f_res, r.z_r, r.n_photon_max)?;
        }
        let w = &self.wavefunction;
        if w.levels == 0 || !(1..=3).contains(&w.slice_axis) {
            return Err(Error::invalid("wavefunction needs levels ≥ 1 and slice_axis in 1..=3"));
        }
        if w.grid < 2 * self.basis.n_max + 1 {
            return Err(Error::Aliasing { grid: w.grid, n_max: self.basis.n_max, required: 2 * self.basis.n_max + 1 });
        }
        if let Some(d) = &self.fit.dataset {
            let p = self.resolve(d);
            if !p.is_file() {
                return Err(config_error(&p, "dataset file not found"));
            }
        }
        if !self.fit.groups.is_empty() {
            self.fit.problem(self.workers).validate()?;
        }
        Ok(())
    }
}
