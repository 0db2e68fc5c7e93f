use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{charge_operator, HamiltonianMatrix, SparseMatrix};
use crate::error::{Error, Result};
use crate::units::{ELEMENTARY_CHARGE, HBAR, PLANCK};

pub const DEFAULT_MAX_COMPOSITE_DIM: usize = 60_000;

/// Readout resonator treated as a single harmonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorModel {
    /// Frequency in GHz.
    pub f_res: f64,
    /// Nominal impedance in Ω.
    pub z_r: f64,
    /// Highest photon number kept.
    pub n_photon_max: usize,
}

impl ResonatorModel {
    pub fn new(f_res: f64, z_r: f64, n_photon_max: usize) -> Result<Self> {
        if !(f_res.is_finite() && f_res > 0.0) {
            return Err(Error::invalid(format!("resonator frequency must be positive, got {f_res}")));
        }
        if !(z_r.is_finite() && z_r > 0.0) {
            return Err(Error::invalid("resonator impedance must be positive"));
        }
        if n_photon_max < 1 {
            return Err(Error::invalid("resonator needs at least one photon level"));
        }
        Ok(Self { f_res, z_r, n_photon_max })
    }

    /// The fitted readout resonator (50 Ω, four photons).
    pub fn fitted_device() -> Self {
        Self {
            f_res: 6.7198,
            z_r: 50.0,
            n_photon_max: 4,
        }
    }

    /// Zero-point voltage √(ħω²Z/π) of a λ/2 resonator, in volts.
    pub fn v0(&self) -> f64 {
        let omega = 2.0 * PI * self.f_res * 1e9;
        (HBAR * omega * omega * self.z_r / PI).sqrt()
    }

    /// 2eV0/h in GHz: the prefactor of Σβ_i n_i (a + a†).
    pub fn coupling_scale_ghz(&self) -> f64 {
        2.0 * ELEMENTARY_CHARGE * self.v0() / PLANCK / 1e9
    }

    fn levels(&self) -> usize {
        self.n_photon_max + 1
    }

    fn number(&self) -> SparseMatrix {
        let d: Vec<f64> = (0..self.levels()).map(|m| m as f64).collect();
        SparseMatrix::from_diagonal(&d)
    }

    fn position(&self) -> SparseMatrix {
        let mut t = Vec::new();
        for m in 1..self.levels() {
            let s = Complex64::new((m as f64).sqrt(), 0.0);
            t.push((m - 1, m, s));
            t.push((m, m - 1, s));
        }
        SparseMatrix::from_triplets(self.levels(), t)
    }
}

/// H_qubit ⊗ 1 + 1 ⊗ f_res a†a + (2eV0/h) Σβ_i n̂_i ⊗ (a + a†), ordered
/// qubit-major (index = q·(n_photon_max+1) + m).
pub fn assemble_composite(
    h_qubit: &HamiltonianMatrix,
    res: &ResonatorModel,
    beta_res: [f64; 3],
    max_dim: usize,
) -> Result<HamiltonianMatrix> {
    if h_qubit.photons.is_some() {
        return Err(Error::invalid("qubit Hamiltonian already includes a resonator"));
    }
    let basis = h_qubit.basis;
    let dim = basis.dim() * res.levels();
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, max: max_dim });
    }
    let mut coupling = SparseMatrix::from_triplets(basis.dim(), vec![]);
    for (mode, &beta) in beta_res.iter().enumerate().take(basis.modes()) {
        coupling = coupling.add(&charge_operator(mode, &basis)?.scale(Complex64::new(beta, 0.0)));
    }
    let photon_id = SparseMatrix::identity(res.levels());
    let qubit_id = SparseMatrix::identity(basis.dim());
    let matrix = h_qubit
        .matrix
        .kron(&photon_id)
        .add(&qubit_id.kron(&res.number().scale(Complex64::new(res.f_res, 0.0))))
        .add(
            &coupling
                .kron(&res.position())
                .scale(Complex64::new(res.coupling_scale_ghz(), 0.0)),
        );
    HamiltonianMatrix {
        matrix,
        gauge: h_qubit.gauge,
        basis,
        photons: Some(res.n_photon_max),
    }
    .checked()
}

/// Composite Hamiltonian projected onto the lowest qubit eigenstates.
///
/// `energies` are the bare qubit levels and `coupling` the matrix of Σβ_i n̂_i
/// between them. Ordering matches [`assemble_composite`].
pub fn assemble_composite_truncated(
    energies: &[f64],
    coupling: &DMatrix<Complex64>,
    res: &ResonatorModel,
) -> DMatrix<Complex64> {
    let k = energies.len();
    let l = res.levels();
    let g = res.coupling_scale_ghz();
    let mut h = DMatrix::zeros(k * l, k * l);
    for a in 0..k {
        for m in 0..l {
            h[(a * l + m, a * l + m)] = Complex64::new(energies[a] + res.f_res * m as f64, 0.0);
        }
        for b in 0..k {
            let c = coupling[(a, b)] * g;
            for m in 1..l {
                let s = (m as f64).sqrt();
                h[(a * l + m - 1, b * l + m)] += c * s;
                h[(a * l + m, b * l + m - 1)] += c * s;
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_point_voltage_and_coupling_scale() {
        let r = ResonatorModel::fitted_device();
        // Direct evaluation with ω = 2π·6.7198 GHz, Z = 50 Ω.
        let omega: f64 = 2.0 * PI * 6.7198e9;
        let v0 = (1.054_571_817e-34 * omega * omega * 50.0 / PI).sqrt();
        assert!((r.v0() - v0).abs() / v0 < 1e-9);
        assert!((r.coupling_scale_ghz() - 2.0 * 1.602_176_634e-19 * v0 / 6.626_070_15e-34 / 1e9).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_resonators() {
        assert!(ResonatorModel::new(0.0, 50.0, 3).is_err());
        assert!(ResonatorModel::new(5.0, 50.0, 0).is_err());
    }
}
