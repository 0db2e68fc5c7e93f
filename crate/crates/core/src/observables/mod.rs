//! Quantities derived from eigenpairs: matrix elements, phase-space
//! wavefunctions, charge dispersion, flux derivatives and classical minima.

mod asymmetry;
mod closed_form;
mod minima;
mod phase;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use asymmetry::{asymmetry_point, asymmetry_scan, write_asymmetry_csv, AsymmetryPoint};
pub use closed_form::{delta_wavefunction, interferometer_transmission, prohibited_charge_weight, Parity};
pub use minima::{classical_minima, potential, PotentialMinimum, MinimaReport};
pub use phase::{support_overlap, to_phase_grid, wrap_phase, PhaseGridWavefunction};

use crate::circuit::ReducedCircuit;
use crate::error::{Error, Result};
use crate::hilbert::{assemble_rhombus, ChargeBasis, Gauge, HamiltonianMatrix, SparseMatrix};
use crate::solver::{eigensolve, EigenResult, SolverSettings};

/// Flux step (Φ0) of the centered first difference.
pub const FLUX_STEP: f64 = 1e-5;
/// Flux step (Φ0) of the second difference.
pub const CURVATURE_STEP: f64 = 5e-4;
/// Phase-grid points per axis used for sin(φ/2) elements (raised to
/// 2·n_max+1 when the basis needs more).
pub const HALF_SIN_GRID: usize = 64;
/// Distance from ±π inside which weight counts as touching the branch cut.
pub const CUT_MARGIN: f64 = PI / 8.0;

/// Operators with matrix elements between eigenstates. Mode and junction
/// indices are 0-based; junction 3 is the fourth (loop-closing) junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorTag {
    /// n̂_i.
    Charge(usize),
    /// N_C^(i) = Σ_j (ec_ij / ec_ii) n̂_j.
    CombinedCharge(usize),
    /// N_D = Σ_i β_D^(i) n̂_i.
    DriveCharge,
    /// N_R = Σ_i β_R^(i) n̂_i.
    ResonatorCharge,
    /// sin of a junction phase.
    Sin(usize),
    /// sin(θ/2) of a junction phase on the principal branch θ ∈ [−π, π).
    HalfSin(usize),
    /// ∂H/∂Φ_ext in GHz/Φ0 for the symmetric flux allocation.
    FluxCoupling,
}

impl OperatorTag {
    pub fn is_hermitian(&self) -> bool {
        true
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            OperatorTag::Charge(i) | OperatorTag::CombinedCharge(i) => i < 3,
            OperatorTag::Sin(j) | OperatorTag::HalfSin(j) => j < 4,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnknownOperator(self.to_string()))
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorTag::Charge(i) => write!(f, "n{}", i + 1),
            OperatorTag::CombinedCharge(i) => write!(f, "nc{}", i + 1),
            OperatorTag::DriveCharge => write!(f, "nd"),
            OperatorTag::ResonatorCharge => write!(f, "nr"),
            OperatorTag::Sin(j) => write!(f, "sin{}", j + 1),
            OperatorTag::HalfSin(j) => write!(f, "sinhalf{}", j + 1),
            OperatorTag::FluxCoupling => write!(f, "ophi"),
        }
    }
}

impl FromStr for OperatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let indexed = |prefix: &str| -> Option<usize> {
            lower
                .strip_prefix(prefix)
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&d| d >= 1)
                .map(|d| d - 1)
        };
        let tag = match lower.as_str() {
            "nd" => Some(OperatorTag::DriveCharge),
            "nr" => Some(OperatorTag::ResonatorCharge),
            "ophi" => Some(OperatorTag::FluxCoupling),
            _ => indexed("sinhalf")
                .map(OperatorTag::HalfSin)
                .or_else(|| indexed("sin").map(OperatorTag::Sin))
                .or_else(|| indexed("nc").map(OperatorTag::CombinedCharge))
                .or_else(|| indexed("n").map(OperatorTag::Charge)),
        };
        let tag = tag.ok_or_else(|| Error::UnknownOperator(s.to_string()))?;
        tag.check().map_err(|_| Error::UnknownOperator(s.to_string()))?;
        Ok(tag)
    }
}

/// ⟨a|Ô|b⟩ together with its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixElementReport {
    pub tag: OperatorTag,
    pub value: Complex64,
    pub magnitude: f64,
    /// For sin(θ/2): largest probability of either state within
    /// [`CUT_MARGIN`] of the branch cut, bounding the branch ambiguity.
    pub cut_weight: Option<f64>,
}

/// Phase of junction `j` given mode phases: φ_j + c for j < 3 and
/// Σφ − θ4 for the fourth junction.
fn junction_phase(j: usize, phi: [f64; 3], offsets: (f64, f64)) -> f64 {
    if j < 3 {
        phi[j] + offsets.0
    } else {
        phi[0] + phi[1] + phi[2] - offsets.1
    }
}

/// e^{iθ_j} for junction `j` as a charge-basis matrix (θ_j as in
/// [`junction_phase`]).
fn junction_exponential(j: usize, basis: &ChargeBasis, offsets: (f64, f64)) -> SparseMatrix {
    let (step, phase): ([i32; 3], f64) = match j {
        0 => ([1, 0, 0], offsets.0),
        1 => ([0, 1, 0], offsets.0),
        2 => ([0, 0, 1], offsets.0),
        _ => ([1, 1, 1], -offsets.1),
    };
    let amp = Complex64::from_polar(1.0, phase);
    let triplets = (0..basis.dim())
        .filter_map(|col| {
            let q = basis.charges(col);
            basis
                .index_of([q[0] + step[0], q[1] + step[1], q[2] + step[2]])
                .map(|row| (row, col, amp))
        })
        .collect();
    SparseMatrix::from_triplets(basis.dim(), triplets)
}

/// sin θ_j = (e^{iθ} − e^{−iθ})/2i.
pub fn sin_operator(junction: usize, basis: &ChargeBasis, gauge: Gauge, phi_ext: f64) -> Result<SparseMatrix> {
    if junction >= 4 {
        return Err(Error::UnknownOperator(format!("sin{}", junction + 1)));
    }
    let up = junction_exponential(junction, basis, gauge.phase_offsets(phi_ext));
    let half_i = Complex64::new(0.0, -0.5);
    Ok(up.sub(&up.adjoint()).scale(half_i))
}

/// O_Φ = ∂H/∂Φ_ext (GHz per Φ0) for the symmetric allocation,
/// (π/2)[Σ_{i≤3} E_J^(i) sin θ_i − E_J^(4) sin θ_4], expressed in the
/// variables of `gauge`.
pub fn flux_operator(circuit: &ReducedCircuit, basis: &ChargeBasis, gauge: Gauge) -> Result<SparseMatrix> {
    let ej = circuit.junctions.energies();
    let mut out = SparseMatrix::from_triplets(basis.dim(), vec![]);
    for (j, &e) in ej.iter().enumerate() {
        let sign = if j < 3 { 1.0 } else { -1.0 };
        let s = sin_operator(j, basis, gauge, circuit.phi_ext)?;
        out = out.add(&s.scale(Complex64::new(0.5 * PI * sign * e, 0.0)));
    }
    Ok(out)
}

fn diagonal_element(a: &[Complex64], b: &[Complex64], basis: &ChargeBasis, weights: [f64; 3]) -> Complex64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let q = basis.charges(i);
            let w = weights[0] * q[0] as f64 + weights[1] * q[1] as f64 + weights[2] * q[2] as f64;
            x.conj() * y * w
        })
        .sum()
}

fn sandwich(op: &SparseMatrix, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    op.mul_vec(b).iter().zip(a).map(|(y, x)| x.conj() * y).sum()
}

/// ⟨a|Ô|b⟩ for states expressed in `basis` under `gauge`.
pub fn matrix_element(
    tag: OperatorTag,
    a: &[Complex64],
    b: &[Complex64],
    circuit: &ReducedCircuit,
    basis: &ChargeBasis,
    gauge: Gauge,
) -> Result<MatrixElementReport> {
    tag.check()?;
    if a.len() != basis.dim() || b.len() != basis.dim() {
        return Err(Error::invalid("states must live in the given basis"));
    }
    let mut cut_weight = None;
    let value = match tag {
        OperatorTag::Charge(i) => {
            let mut w = [0.0; 3];
            w[i] = 1.0;
            diagonal_element(a, b, basis, w)
        }
        OperatorTag::CombinedCharge(i) => {
            let ec = circuit.ec;
            let w = [ec[i][0] / ec[i][i], ec[i][1] / ec[i][i], ec[i][2] / ec[i][i]];
            diagonal_element(a, b, basis, w)
        }
        OperatorTag::DriveCharge => {
            let beta = circuit.beta_drive.ok_or(Error::MissingCoupling("drive"))?;
            diagonal_element(a, b, basis, beta)
        }
        OperatorTag::ResonatorCharge => {
            let beta = circuit.beta_res.ok_or(Error::MissingCoupling("resonator"))?;
            diagonal_element(a, b, basis, beta)
        }
        OperatorTag::Sin(j) => sandwich(&sin_operator(j, basis, gauge, circuit.phi_ext)?, a, b),
        OperatorTag::FluxCoupling => sandwich(&flux_operator(circuit, basis, gauge)?, a, b),
        OperatorTag::HalfSin(j) => {
            let m = HALF_SIN_GRID.max(2 * basis.n_max() + 1);
            let ga = to_phase_grid(a, basis, m)?;
            let gb = to_phase_grid(b, basis, m)?;
            let offsets = gauge.phase_offsets(circuit.phi_ext);
            let theta = |phi: [f64; 3]| wrap_phase(junction_phase(j, phi, offsets));
            let near_cut = |phi: [f64; 3]| theta(phi).abs() > PI - CUT_MARGIN;
            cut_weight = Some(ga.weight_where(near_cut).max(gb.weight_where(near_cut)));
            ga.sandwich(&gb, |phi| (0.5 * theta(phi)).sin())?
        }
    };
    Ok(MatrixElementReport {
        tag,
        value,
        magnitude: value.norm(),
        cut_weight,
    })
}

fn solve(circuit: &ReducedCircuit, basis: &ChargeBasis, k: usize, settings: &SolverSettings) -> Result<EigenResult> {
    let h = assemble_rhombus(circuit, basis, Gauge::SingleJunction)?;
    eigensolve(&h, k, settings)
}

fn transition(circuit: &ReducedCircuit, basis: &ChargeBasis, levels: (usize, usize), settings: &SolverSettings) -> Result<f64> {
    let k = levels.0.max(levels.1) + 1;
    Ok(solve(circuit, basis, k, settings)?.transition(levels.0, levels.1))
}

fn check_step(step: f64) -> Result<()> {
    if !(step.is_finite() && step >= 1e-9) {
        return Err(Error::invalid(format!("finite-difference step {step} too small")));
    }
    Ok(())
}

/// |f_ab(n_g1 = 0.5) − f_ab(n_g1 = 0)| with the other offsets at zero (GHz).
pub fn charge_dispersion(
    circuit: &ReducedCircuit,
    basis: &ChargeBasis,
    levels: (usize, usize),
    settings: &SolverSettings,
) -> Result<f64> {
    let base = circuit.with_offsets([0.0; 3]);
    offset_dispersion(|ng| assemble_rhombus(&base.with_offset(0, ng), basis, Gauge::SingleJunction), levels, settings)
}

/// |f_ab(0.5) − f_ab(0)| for any Hamiltonian family parametrized by one
/// offset charge.
pub fn offset_dispersion<F>(assemble: F, levels: (usize, usize), settings: &SolverSettings) -> Result<f64>
where
    F: Fn(f64) -> Result<HamiltonianMatrix>,
{
    let k = levels.0.max(levels.1) + 1;
    let f = |ng: f64| -> Result<f64> { Ok(eigensolve(&assemble(ng)?, k, settings)?.transition(levels.0, levels.1)) };
    Ok((f(0.5)? - f(0.0)?).abs())
}

/// Centered first difference ∂f01/∂Φ_ext (GHz/Φ0).
pub fn flux_slope(circuit: &ReducedCircuit, basis: &ChargeBasis, step: f64, settings: &SolverSettings) -> Result<f64> {
    check_step(step)?;
    let phi = circuit.phi_ext;
    let up = transition(&circuit.with_flux(phi + step), basis, (0, 1), settings)?;
    let down = transition(&circuit.with_flux(phi - step), basis, (0, 1), settings)?;
    Ok((up - down) / (2.0 * step))
}

/// Second difference ∂²f01/∂Φ_ext² (GHz/Φ0²).
pub fn flux_curvature(circuit: &ReducedCircuit, basis: &ChargeBasis, step: f64, settings: &SolverSettings) -> Result<f64> {
    check_step(step)?;
    let phi = circuit.phi_ext;
    let up = transition(&circuit.with_flux(phi + step), basis, (0, 1), settings)?;
    let mid = transition(circuit, basis, (0, 1), settings)?;
    let down = transition(&circuit.with_flux(phi - step), basis, (0, 1), settings)?;
    Ok((up - 2.0 * mid + down) / (step * step))
}

/// ∂f01/∂Φ_ext from ⟨1|O_Φ|1⟩ − ⟨0|O_Φ|0⟩.
pub fn hellmann_feynman_slope(
    circuit: &ReducedCircuit,
    basis: &ChargeBasis,
    settings: &SolverSettings,
) -> Result<f64> {
    let r = solve(circuit, basis, 2, settings)?;
    let op = flux_operator(circuit, basis, Gauge::SingleJunction)?;
    Ok(sandwich(&op, &r.vectors[1], &r.vectors[1]).re - sandwich(&op, &r.vectors[0], &r.vectors[0]).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::JunctionSet;

    fn symmetric(alpha: f64, phi: f64) -> ReducedCircuit {
        let base = ReducedCircuit::fitted_device(phi);
        base.with_junctions(JunctionSet::with_alpha([13.0; 3], alpha).unwrap())
    }

    fn eig(c: &ReducedCircuit, basis: &ChargeBasis, gauge: Gauge) -> EigenResult {
        let h = assemble_rhombus(c, basis, gauge).unwrap();
        eigensolve(&h, 2, &SolverSettings::default()).unwrap()
    }

    /// ⟨n|sin(θ/2)|m⟩ on the principal branch, k = n − m.
    fn half_sin_kernel(k: i32) -> Complex64 {
        let k = k as f64;
        let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Complex64::new(0.0, sign * k / (PI * (k * k - 0.25)))
    }

    #[test]
    fn tags_round_trip_and_reject_unknown() {
        for tag in [
            OperatorTag::Charge(2),
            OperatorTag::CombinedCharge(0),
            OperatorTag::DriveCharge,
            OperatorTag::Sin(3),
            OperatorTag::HalfSin(1),
            OperatorTag::FluxCoupling,
        ] {
            assert_eq!(tag.to_string().parse::<OperatorTag>().unwrap(), tag);
        }
        assert!(matches!("n4".parse::<OperatorTag>(), Err(Error::UnknownOperator(_))));
        assert!(matches!("cos1".parse::<OperatorTag>(), Err(Error::UnknownOperator(_))));
    }

    #[test]
    fn diagonal_charge_elements_are_real_and_conjugate_symmetric() {
        let basis = ChargeBasis::rhombus(4).unwrap();
        let c = ReducedCircuit::fitted_device(0.47).with_offsets([0.1, 0.2, -0.1]);
        let r = eig(&c, &basis, Gauge::SingleJunction);
        let (a, b) = (&r.vectors[0], &r.vectors[1]);
        for tag in [OperatorTag::Charge(0), OperatorTag::CombinedCharge(1), OperatorTag::Sin(3), OperatorTag::FluxCoupling] {
            let d = matrix_element(tag, a, a, &c, &basis, Gauge::SingleJunction).unwrap();
            assert!(d.value.im.abs() < 1e-12, "{tag}");
            let ab = matrix_element(tag, a, b, &c, &basis, Gauge::SingleJunction).unwrap();
            let ba = matrix_element(tag, b, a, &c, &basis, Gauge::SingleJunction).unwrap();
            assert!((ab.value - ba.value.conj()).norm() < 1e-12);
            assert_eq!(ab.magnitude, ab.value.norm());
        }
    }

    #[test]
    fn missing_drive_coupling_is_reported() {
        let basis = ChargeBasis::rhombus(1).unwrap();
        let v = vec![Complex64::new(1.0, 0.0); basis.dim()];
        let c = ReducedCircuit::fitted_device(0.5);
        assert!(matches!(
            matrix_element(OperatorTag::DriveCharge, &v, &v, &c, &basis, Gauge::SingleJunction),
            Err(Error::MissingCoupling("drive"))
        ));
    }

    #[test]
    fn half_sin_grid_matches_analytic_charge_kernel() {
        let basis = ChargeBasis::rhombus(5).unwrap();
        let c = ReducedCircuit::fitted_device(0.45);
        let r = eig(&c, &basis, Gauge::SingleJunction);
        let (a, b) = (&r.vectors[0], &r.vectors[1]);
        for j in 0..3 {
            let grid = matrix_element(OperatorTag::HalfSin(j), a, b, &c, &basis, Gauge::SingleJunction).unwrap();
            let mut exact = Complex64::new(0.0, 0.0);
            for (ia, x) in a.iter().enumerate() {
                let qa = basis.charges(ia);
                for (ib, y) in b.iter().enumerate() {
                    let qb = basis.charges(ib);
                    let same = (0..3).filter(|&m| m != j).all(|m| qa[m] == qb[m]);
                    if same {
                        exact += x.conj() * y * half_sin_kernel(qa[j] - qb[j]);
                    }
                }
            }
            assert!(grid.cut_weight.unwrap() < 1e-3);
            assert!((grid.value - exact).norm() < 1e-4 + 10.0 * grid.cut_weight.unwrap(), "{j}: {} vs {}", grid.value, exact);
        }
    }

    #[test]
    fn flux_operator_magnitudes_are_gauge_invariant() {
        let basis = ChargeBasis::rhombus(4).unwrap();
        let c = ReducedCircuit::fitted_device(0.46);
        let mut mags = vec![];
        for gauge in [Gauge::SingleJunction, Gauge::Symmetric] {
            let r = eig(&c, &basis, gauge);
            let m = matrix_element(OperatorTag::FluxCoupling, &r.vectors[0], &r.vectors[1], &c, &basis, gauge).unwrap();
            let h = matrix_element(OperatorTag::HalfSin(0), &r.vectors[0], &r.vectors[1], &c, &basis, gauge).unwrap();
            mags.push((m.magnitude, h.magnitude));
        }
        assert!((mags[0].0 - mags[1].0).abs() < 1e-8 * mags[0].0);
        assert!((mags[0].1 - mags[1].1).abs() < 1e-6);
    }

    #[test]
    fn charge_parity_suppression_at_frustration() {
        // Equal junctions suppress ⟨0|n̂_1|1⟩ by more than three decades
        // relative to the soft rhombus; the residual comes from ec13 ≠ ec12.
        let basis = ChargeBasis::rhombus(7).unwrap();
        let element = |alpha: f64| {
            let c = symmetric(alpha, 0.5);
            let r = eig(&c, &basis, Gauge::SingleJunction);
            matrix_element(OperatorTag::Charge(0), &r.vectors[0], &r.vectors[1], &c, &basis, Gauge::SingleJunction)
                .unwrap()
                .magnitude
        };
        let (hard, soft) = (element(1.0), element(0.63));
        assert!(hard < 1e-4 && soft > 1e3 * hard, "{hard} {soft}");
    }

    #[test]
    fn slope_vanishes_at_symmetric_points_and_matches_hellmann_feynman() {
        let basis = ChargeBasis::rhombus(5).unwrap();
        let s = SolverSettings::default();
        for phi in [0.0, 0.5] {
            let c = ReducedCircuit::fitted_device(phi);
            assert!(flux_slope(&c, &basis, FLUX_STEP, &s).unwrap().abs() < 1e-4);
        }
        let c = ReducedCircuit::fitted_device(0.47);
        let fd = flux_slope(&c, &basis, FLUX_STEP, &s).unwrap();
        let hf = hellmann_feynman_slope(&c, &basis, &s).unwrap();
        assert!((fd - hf).abs() < 1e-4, "{fd} vs {hf}");
        assert!(flux_slope(&c, &basis, 0.0, &s).is_err());
    }

    #[test]
    fn cp_qubit_dispersion_matches_two_direct_solves() {
        use crate::hilbert::assemble_cp_qubit;
        use crate::solver::eigensolve_dense;
        let s = SolverSettings::default();
        let d = offset_dispersion(|ng| assemble_cp_qubit(1.0, 6.0, ng, 8), (0, 1), &s).unwrap();
        let f = |ng: f64| eigensolve_dense(&assemble_cp_qubit(1.0, 6.0, ng, 8).unwrap().matrix, 2).unwrap().f01();
        assert!((d - (f(0.5) - f(0.0)).abs()).abs() < 1e-12);
        assert!(d > 0.0);
    }

    #[test]
    fn transmon_limit_kills_dispersion() {
        let basis = ChargeBasis::rhombus(8).unwrap();
        let s = SolverSettings::default();
        let ec = [[0.2, -0.04, 0.0], [-0.04, 0.2, -0.04], [0.0, -0.04, 0.2]];
        let heavy = ReducedCircuit::new(ec, JunctionSet::new([25.0, 25.0, 25.0, 0.5]).unwrap(), [0.0; 3], 0.0).unwrap();
        let light = ReducedCircuit::new(ec, JunctionSet::new([2.0, 2.0, 2.0, 0.5]).unwrap(), [0.0; 3], 0.0).unwrap();
        let d_heavy = charge_dispersion(&heavy, &basis, (0, 1), &s).unwrap();
        let d_light = charge_dispersion(&light, &basis, (0, 1), &s).unwrap();
        assert!(d_heavy < 1e-5 && d_light > 1e3 * d_heavy, "{d_heavy} {d_light}");
    }
}
