use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    dephasing_rates, gamma1_dielectric, gamma1_drive, gamma1_flux, gamma1_purcell, gamma1_qp_junctions,
    resonator_coupling, DephasingChannel, NoiseEnvironment, QubitStates,
};
use crate::circuit::ReducedCircuit;
use crate::error::{Error, Result};
use crate::hilbert::{ChargeBasis, ResonatorModel};
use crate::solver::{build_pool, SolverSettings};

/// What a single rate contribution describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Dielectric,
    Drive,
    Purcell,
    Flux,
    Quasiparticle(usize),
    Ramsey(DephasingChannel),
    Echo(DephasingChannel),
}

impl RateKind {
    fn is_relaxation(self) -> bool {
        !matches!(self, RateKind::Ramsey(_) | RateKind::Echo(_))
    }
}

/// One channel's rate (s⁻¹) evaluated at transition frequency `f01` (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRate {
    pub kind: RateKind,
    pub f01: f64,
    pub rate: f64,
}

impl ChannelRate {
    pub fn new(kind: RateKind, f01: f64, rate: f64) -> Self {
        Self { kind, f01, rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingPair {
    pub channel: DephasingChannel,
    pub ramsey: f64,
    pub echo: f64,
}

/// Rates in s⁻¹ at one operating point. Channels that could not be
/// evaluated (e.g. no drive coupling given) are `None` and excluded from the
/// totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub flux_phi0: f64,
    pub f01: f64,
    pub dielectric: Option<f64>,
    pub drive: Option<f64>,
    pub purcell: Option<f64>,
    pub flux: Option<f64>,
    /// Per junction, 0-based.
    pub qp: [f64; 4],
    pub dephasing: Vec<DephasingPair>,
    /// Relaxation channels add.
    pub gamma1_total: f64,
    /// 1/f dephasing channels are Gaussian and add in quadrature.
    pub gphi_ramsey: f64,
    pub gphi_echo: f64,
    /// Linear sums, for comparison with exponential-decay bookkeeping.
    pub gphi_ramsey_linear: f64,
    pub gphi_echo_linear: f64,
}

impl RateReport {
    pub fn qp_total(&self) -> f64 {
        self.qp.iter().sum()
    }

    /// T1 in seconds.
    pub fn t1(&self) -> f64 {
        1.0 / self.gamma1_total
    }

    /// Ramsey pure-dephasing time in seconds.
    pub fn t_phi_ramsey(&self) -> f64 {
        1.0 / self.gphi_ramsey
    }

    pub fn t_phi_echo(&self) -> f64 {
        1.0 / self.gphi_echo
    }
}

/// Combine channel rates taken at one transition frequency.
pub fn aggregate(parts: &[ChannelRate], flux_phi0: f64) -> Result<RateReport> {
    let f01 = parts.first().ok_or_else(|| Error::invalid("no rates to aggregate"))?.f01;
    let mut report = RateReport {
        flux_phi0,
        f01,
        dielectric: None,
        drive: None,
        purcell: None,
        flux: None,
        qp: [0.0; 4],
        dephasing: Vec::new(),
        gamma1_total: 0.0,
        gphi_ramsey: 0.0,
        gphi_echo: 0.0,
        gphi_ramsey_linear: 0.0,
        gphi_echo_linear: 0.0,
    };
    for p in parts {
        if (p.f01 - f01).abs() > 1e-9 * f01.abs().max(1e-3) {
            return Err(Error::invalid(format!("rates taken at different frequencies ({} vs {f01} GHz)", p.f01)));
        }
        if !(p.rate.is_finite() && p.rate >= 0.0) {
            return Err(Error::invalid(format!("{:?} rate {} is not a nonnegative number", p.kind, p.rate)));
        }
        let add = |slot: &mut Option<f64>| *slot = Some(slot.unwrap_or(0.0) + p.rate);
        match p.kind {
            RateKind::Dielectric => add(&mut report.dielectric),
            RateKind::Drive => add(&mut report.drive),
            RateKind::Purcell => add(&mut report.purcell),
            RateKind::Flux => add(&mut report.flux),
            RateKind::Quasiparticle(j) => {
                *report.qp.get_mut(j).ok_or_else(|| Error::invalid(format!("junction {} out of range", j + 1)))? += p.rate
            }
            RateKind::Ramsey(ch) | RateKind::Echo(ch) => {
                let pos = match report.dephasing.iter().position(|d| d.channel == ch) {
                    Some(i) => i,
                    None => {
                        report.dephasing.push(DephasingPair { channel: ch, ramsey: 0.0, echo: 0.0 });
                        report.dephasing.len() - 1
                    }
                };
                let pair = &mut report.dephasing[pos];
                if matches!(p.kind, RateKind::Ramsey(_)) {
                    pair.ramsey += p.rate;
                } else {
                    pair.echo += p.rate;
                }
            }
        }
        if p.kind.is_relaxation() {
            report.gamma1_total += p.rate;
        }
    }
    let quad = |f: fn(&DephasingPair) -> f64| report.dephasing.iter().fold(0.0, |acc, d| acc + f(d).powi(2)).sqrt();
    let lin = |f: fn(&DephasingPair) -> f64| report.dephasing.iter().fold(0.0, |acc, d| acc + f(d));
    report.gphi_ramsey = quad(|d| d.ramsey);
    report.gphi_echo = quad(|d| d.echo);
    report.gphi_ramsey_linear = lin(|d| d.ramsey);
    report.gphi_echo_linear = lin(|d| d.echo);
    Ok(report)
}

/// Every channel at one bias point. Drive loss needs β_D on the circuit;
/// Purcell loss needs a resonator and either `env.g_coupling` or β_R.
pub fn coherence_budget(
    circuit: &ReducedCircuit,
    basis: &ChargeBasis,
    env: &NoiseEnvironment,
    resonator: Option<&ResonatorModel>,
    settings: &SolverSettings,
) -> Result<RateReport> {
    env.validate()?;
    let states = QubitStates::solve(circuit, basis, settings)?;
    let f01 = states.f01;
    let mut parts = vec![
        ChannelRate::new(RateKind::Dielectric, f01, gamma1_dielectric(&states, env)?),
        ChannelRate::new(RateKind::Flux, f01, gamma1_flux(&states, env)?),
    ];
    if circuit.beta_drive.is_some() {
        parts.push(ChannelRate::new(RateKind::Drive, f01, gamma1_drive(&states, env)?));
    }
    if let Some(res) = resonator {
        let g = match env.g_coupling {
            Some(g) => Some(g),
            None if circuit.beta_res.is_some() => Some(resonator_coupling(&states, res)?),
            None => None,
        };
        if let Some(g) = g {
            parts.push(ChannelRate::new(RateKind::Purcell, f01, gamma1_purcell(env, g, f01, res.f_res)?));
        }
    }
    for (j, rate) in gamma1_qp_junctions(&states, env)?.into_iter().enumerate() {
        parts.push(ChannelRate::new(RateKind::Quasiparticle(j), f01, rate));
    }
    for ch in [DephasingChannel::Flux, DephasingChannel::Charge] {
        let (ramsey, echo) = dephasing_rates(circuit, basis, env, ch, settings)?;
        parts.push(ChannelRate::new(RateKind::Ramsey(ch), f01, ramsey));
        parts.push(ChannelRate::new(RateKind::Echo(ch), f01, echo));
    }
    aggregate(&parts, circuit.phi_ext)
}

/// Budgets over a flux grid, evaluated on `workers` threads (0 = all cores).
/// Row order follows the grid regardless of the pool size.
pub fn coherence_table(
    circuit: &ReducedCircuit,
    flux_grid: &[f64],
    basis: &ChargeBasis,
    env: &NoiseEnvironment,
    resonator: Option<&ResonatorModel>,
    settings: &SolverSettings,
    workers: usize,
) -> Result<Vec<RateReport>> {
    env.validate()?;
    if flux_grid.is_empty() || flux_grid.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("flux grid must be non-empty and finite"));
    }
    let pool = build_pool(workers)?;
    pool.install(|| {
        flux_grid
            .par_iter()
            .enumerate()
            .map(|(index, &phi)| {
                coherence_budget(&circuit.with_flux(phi), basis, env, resonator, settings)
                    .map_err(|e| Error::Sweep { index, source: Box::new(e) })
            })
            .collect()
    })
}

/// CSV with a `#`-prefixed metadata block; absent channels are left empty.
pub fn write_coherence_csv<W: Write>(out: &mut W, rows: &[RateReport], header: &[(String, String)]) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "flux_phi0,f01_ghz,g1_diel,g1_drive,g1_purcell,g1_flux,g1_qp,g1_total,gphi_ramsey,gphi_echo")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{:.8},{:.9},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.flux_phi0,
            r.f01,
            opt(r.dielectric),
            opt(r.drive),
            opt(r.purcell),
            opt(r.flux),
            r.qp_total(),
            r.gamma1_total,
            r.gphi_ramsey,
            r.gphi_echo
        )?;
    }
    Ok(())
}
