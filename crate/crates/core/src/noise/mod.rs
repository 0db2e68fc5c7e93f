//! Decoherence channels: golden-rule relaxation and 1/f dephasing.
//!
//! Inputs are in the crate's units (GHz, Φ0, K, μeV); every formula is
//! evaluated in SI and returns rates in s⁻¹.

mod bessel;
mod budget;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use bessel::{k0, k0_cosh};
pub use budget::{
    aggregate, coherence_budget, coherence_table, write_coherence_csv, ChannelRate, DephasingPair, RateKind,
    RateReport,
};

use crate::circuit::ReducedCircuit;
use crate::error::{Error, Result};
use crate::hilbert::{assemble_rhombus, ChargeBasis, Gauge, ResonatorModel};
use crate::observables::{flux_slope, matrix_element, OperatorTag, FLUX_STEP};
use crate::solver::{eigensolve, EigenResult, SolverSettings};
use crate::units::{angular, thermal_ratio, BOLTZMANN, ELECTRON_VOLT, ELEMENTARY_CHARGE, HBAR, PLANCK};

/// Noise sources and bath parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseEnvironment {
    /// 1/f flux-noise amplitude in Φ0.
    pub a_phi: f64,
    /// 1/f charge-noise amplitude (Cooper pairs).
    pub a_n: f64,
    /// Capacitive quality factor.
    pub q_cap: f64,
    /// Normalized quasiparticle density.
    pub x_qp: f64,
    /// Bath temperature in K.
    pub temp: f64,
    /// Superconducting gap in μeV.
    pub gap_delta: f64,
    /// Drive-line impedance in Ω.
    pub z0: f64,
    /// Resonator linewidth κ in rad/s.
    pub kappa: f64,
    /// Qubit–resonator coupling in GHz; derived from β_R when absent.
    pub g_coupling: Option<f64>,
    /// Ramsey/echo dephasing ratio.
    pub chi_ratio: f64,
    /// Half-width (Φ0) of the window around Φ0/2 where the fourth junction's
    /// quasiparticle channel is dropped.
    pub qp_window: f64,
}

impl Default for NoiseEnvironment {
    fn default() -> Self {
        Self::fig6()
    }
}

impl NoiseEnvironment {
    /// Flux 4 μΦ0, charge 2e-4, Q_C 8e5, x_qp 1e-8, 50 mK, χ = 6, Δ = 200 μeV,
    /// 50 Ω drive line, κ = 2π·1 MHz.
    pub fn fig6() -> Self {
        Self {
            a_phi: 4e-6,
            a_n: 2e-4,
            q_cap: 8e5,
            x_qp: 1e-8,
            temp: 0.05,
            gap_delta: 200.0,
            z0: 50.0,
            kappa: 2.0 * PI * 1e6,
            g_coupling: None,
            chi_ratio: 6.0,
            qp_window: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a_phi", self.a_phi),
            ("a_n", self.a_n),
            ("q_cap", self.q_cap),
            ("x_qp", self.x_qp),
            ("gap_delta", self.gap_delta),
            ("z0", self.z0),
            ("kappa", self.kappa),
            ("qp_window", self.qp_window),
            ("g_coupling", self.g_coupling.unwrap_or(0.0)),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !(self.temp.is_finite() && self.temp > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !(self.chi_ratio >= 1.0) {
            return Err(Error::invalid("Ramsey/echo ratio must be at least 1"));
        }
        Ok(())
    }

    /// coth(ħω/2k_BT).
    pub fn thermal_factor(&self, f01: f64) -> f64 {
        1.0 / thermal_ratio(f01, self.temp).tanh()
    }
}

/// The two computational states at one bias point.
#[derive(Debug, Clone)]
pub struct QubitStates {
    pub circuit: ReducedCircuit,
    pub basis: ChargeBasis,
    pub gauge: Gauge,
    pub ground: Vec<Complex64>,
    pub excited: Vec<Complex64>,
    /// f01 in GHz.
    pub f01: f64,
}

impl QubitStates {
    pub fn from_eigen(circuit: &ReducedCircuit, basis: &ChargeBasis, gauge: Gauge, eigen: &EigenResult) -> Result<Self> {
        if eigen.len() < 2 {
            return Err(Error::invalid("need the two lowest eigenpairs"));
        }
        Ok(Self {
            circuit: *circuit,
            basis: *basis,
            gauge,
            ground: eigen.vectors[0].clone(),
            excited: eigen.vectors[1].clone(),
            f01: eigen.f01(),
        })
    }

    /// Diagonalize `circuit` on `basis` and keep the two lowest states.
    pub fn solve(circuit: &ReducedCircuit, basis: &ChargeBasis, settings: &SolverSettings) -> Result<Self> {
        let h = assemble_rhombus(circuit, basis, Gauge::SingleJunction)?;
        let eigen = eigensolve(&h, 2, settings)?;
        Self::from_eigen(circuit, basis, Gauge::SingleJunction, &eigen)
    }

    /// |⟨0|Ô|1⟩|².
    pub fn element_sqr(&self, tag: OperatorTag) -> Result<f64> {
        let r = matrix_element(tag, &self.ground, &self.excited, &self.circuit, &self.basis, self.gauge)?;
        Ok(r.magnitude * r.magnitude)
    }

    fn positive_f01(&self) -> Result<f64> {
        if !(self.f01 > 0.0) {
            return Err(Error::Divergence(format!("transition frequency {} GHz is not positive", self.f01)));
        }
        Ok(self.f01)
    }
}

/// Γ = |⟨0|Ô|1⟩|² S⁺(ω) / ħ² with the operator in J per unit of the noisy
/// parameter and S⁺ in (unit)²·s.
pub fn golden_rule_rate(matrix_element_sq: f64, s_plus: f64) -> f64 {
    matrix_element_sq * s_plus / (HBAR * HBAR)
}

/// Dielectric loss through the three offset charges:
/// (32π/Q_C) Σ_i (E_C^(ii)/h) |⟨0|N_C^(i)|1⟩|² coth(ħω/2k_BT).
pub fn gamma1_dielectric(states: &QubitStates, env: &NoiseEnvironment) -> Result<f64> {
    if env.q_cap == 0.0 {
        return Err(Error::UndefinedChannel("dielectric loss needs Q_C > 0".into()));
    }
    let f01 = states.positive_f01()?;
    let mut sum = 0.0;
    for i in 0..3 {
        let ec_hz = states.circuit.ec[i][i] * 1e9;
        sum += ec_hz * states.element_sqr(OperatorTag::CombinedCharge(i))?;
    }
    Ok(32.0 * PI / env.q_cap * sum * env.thermal_factor(f01))
}

/// Drive-line loss: (16π Z0 e²/h) |⟨0|N_D|1⟩|² ω01 coth(ħω/2k_BT).
pub fn gamma1_drive(states: &QubitStates, env: &NoiseEnvironment) -> Result<f64> {
    let f01 = states.positive_f01()?;
    let m = states.element_sqr(OperatorTag::DriveCharge)?;
    let prefactor = 16.0 * PI * env.z0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / PLANCK;
    Ok(prefactor * m * angular(f01) * env.thermal_factor(f01))
}

/// Purcell decay κ (g/(ω_res − ω01))² with g and both frequencies in GHz.
pub fn gamma1_purcell(env: &NoiseEnvironment, g: f64, f01: f64, f_res: f64) -> Result<f64> {
    let detuning = f_res - f01;
    if detuning.abs() < 1e-9 {
        return Err(Error::Divergence("qubit on resonance with the readout resonator".into()));
    }
    Ok(env.kappa * (g / detuning).powi(2))
}

/// g = (2eV0/h)|⟨0|Σβ_R n̂|1⟩| in GHz.
pub fn resonator_coupling(states: &QubitStates, res: &ResonatorModel) -> Result<f64> {
    Ok(res.coupling_scale_ghz() * states.element_sqr(OperatorTag::ResonatorCharge)?.sqrt())
}

/// 1/f flux noise: |⟨0|O_Φ|1⟩|² · 4πA_Φ²/ω01 / ħ².
pub fn gamma1_flux(states: &QubitStates, env: &NoiseEnvironment) -> Result<f64> {
    let f01 = states.positive_f01()?;
    // O_Φ in GHz/Φ0 → J/Φ0; A_Φ in Φ0.
    let o_joule_sq = states.element_sqr(OperatorTag::FluxCoupling)? * (PLANCK * 1e9).powi(2);
    let s_plus = 2.0 * (2.0 * PI * env.a_phi * env.a_phi / angular(f01));
    Ok(golden_rule_rate(o_joule_sq, s_plus))
}

/// Full temperature-dependent quasiparticle rate for one junction, given
/// |⟨0|sin(θ/2)|1⟩|², E_J (GHz) and f01 (GHz).
pub fn qp_rate_full(sin_half_sq: f64, e_j: f64, f01: f64, env: &NoiseEnvironment) -> Result<f64> {
    if !(env.temp > 0.0) {
        return Err(Error::Divergence("quasiparticle rate needs T > 0".into()));
    }
    if !(f01 > 0.0) {
        return Err(Error::Divergence("quasiparticle rate needs f01 > 0".into()));
    }
    let delta = env.gap_delta * 1e-6 * ELECTRON_VOLT;
    let kt = BOLTZMANN * env.temp;
    let x = thermal_ratio(f01, env.temp);
    Ok(sin_half_sq * 32.0 * e_j * 1e9 * env.x_qp * (2.0 * delta / (PI * kt)).sqrt() * k0_cosh(x))
}

/// Low-temperature form 16 (E_J/h) √(2Δ/ħω01) x_qp |⟨0|sin(θ/2)|1⟩|².
pub fn qp_rate_simplified(sin_half_sq: f64, e_j: f64, f01: f64, env: &NoiseEnvironment) -> f64 {
    let delta = env.gap_delta * 1e-6 * ELECTRON_VOLT;
    let hw = HBAR * angular(f01);
    sin_half_sq * 16.0 * e_j * 1e9 * (2.0 * delta / hw).sqrt() * env.x_qp
}

/// Quasiparticle tunneling across junction `junction` (0-based, 3 = fourth).
pub fn gamma1_qp(states: &QubitStates, env: &NoiseEnvironment, junction: usize) -> Result<f64> {
    let f01 = states.positive_f01()?;
    let m = states.element_sqr(OperatorTag::HalfSin(junction))?;
    qp_rate_full(m, states.circuit.junctions.get(junction), f01, env)
}

/// Per-junction quasiparticle rates; the fourth junction is zeroed within
/// `env.qp_window` of Φ0/2 (half-integer flux in general).
pub fn gamma1_qp_junctions(states: &QubitStates, env: &NoiseEnvironment) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    let phi = states.circuit.phi_ext;
    let near_frustration = ((phi - 0.5).rem_euclid(1.0) - 0.5).abs() > 0.5 - env.qp_window;
    for (j, rate) in out.iter_mut().enumerate() {
        if j == 3 && near_frustration {
            continue;
        }
        *rate = gamma1_qp(states, env, j)?;
    }
    Ok(out)
}

pub fn gamma1_qp_total(states: &QubitStates, env: &NoiseEnvironment) -> Result<f64> {
    Ok(gamma1_qp_junctions(states, env)?.iter().sum())
}

/// Noise channel of a dephasing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DephasingChannel {
    Flux,
    Charge,
}

/// Echo rate A·|∂ω01/∂ξ|·√ln2 for a sensitivity given in GHz per unit ξ.
pub fn echo_rate(amplitude: f64, sensitivity_ghz: f64) -> f64 {
    amplitude * angular(sensitivity_ghz.abs()) * std::f64::consts::LN_2.sqrt()
}

/// |∇_{n_g} f01| from half-period differences (GHz per Cooper pair).
pub fn charge_gradient(circuit: &ReducedCircuit, basis: &ChargeBasis, settings: &SolverSettings) -> Result<f64> {
    let f01 = |c: &ReducedCircuit| -> Result<f64> {
        Ok(eigensolve(&assemble_rhombus(c, basis, Gauge::SingleJunction)?, 2, settings)?.f01())
    };
    let base = circuit.with_offsets([0.0; 3]);
    let f0 = f01(&base)?;
    let mut sum = 0.0;
    for i in 0..3 {
        let d = (f01(&base.with_offset(i, 0.5))? - f0) / 0.5;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// (Ramsey, echo) pure-dephasing rates of one channel.
pub fn dephasing_rates(
    circuit: &ReducedCircuit,
    basis: &ChargeBasis,
    env: &NoiseEnvironment,
    channel: DephasingChannel,
    settings: &SolverSettings,
) -> Result<(f64, f64)> {
    let echo = match channel {
        DephasingChannel::Flux => echo_rate(env.a_phi, flux_slope(circuit, basis, FLUX_STEP, settings)?),
        DephasingChannel::Charge => echo_rate(env.a_n, charge_gradient(circuit, basis, settings)?),
    };
    Ok((env.chi_ratio * echo, echo))
}
