//! Charge-basis operators and Hamiltonian assembly.

mod basis;
mod composite;
mod sparse;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use basis::{charge_operator, shift_operator, ChargeBasis};
pub use composite::{assemble_composite, assemble_composite_truncated, ResonatorModel, DEFAULT_MAX_COMPOSITE_DIM};
pub use sparse::SparseMatrix;

use crate::circuit::ReducedCircuit;
use crate::error::{Error, Result};

/// Default per-mode charge truncation.
pub const DEFAULT_N_MAX: usize = 6;

/// How the external flux is distributed over the junction phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// All flux on junction 4: cos(φ1+φ2+φ3 − 2πΦ/Φ0).
    #[default]
    SingleJunction,
    /// πΦ/(2Φ0) on every junction.
    Symmetric,
}

impl Gauge {
    /// Phase offsets (c, θ4) such that junctions 1–3 carry cos(φ_i + c) and
    /// junction 4 carries cos(Σφ − θ4).
    pub fn phase_offsets(self, phi_ext: f64) -> (f64, f64) {
        match self {
            Gauge::SingleJunction => (0.0, 2.0 * PI * phi_ext),
            Gauge::Symmetric => (0.5 * PI * phi_ext, 0.5 * PI * phi_ext),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gauge::SingleJunction => "single-junction",
            Gauge::Symmetric => "symmetric",
        }
    }
}

/// Hermitian operator on a truncated charge basis (optionally tensored with
/// a resonator Fock space of `photons + 1` levels), in GHz.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub matrix: SparseMatrix,
    pub gauge: Gauge,
    pub basis: ChargeBasis,
    pub photons: Option<usize>,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn checked(self) -> Result<Self> {
        let expect = self.basis.dim() * self.photons.map_or(1, |n| n + 1);
        if expect != self.matrix.dim() {
            return Err(Error::invalid("matrix dimension does not match basis"));
        }
        let deviation = self.matrix.hermitian_deviation();
        if deviation > 1e-12 * self.matrix.max_abs().max(1.0) {
            return Err(Error::NonHermitian { deviation });
        }
        Ok(self)
    }
}

/// Kinetic energy Σ_ij 4·ec_ij (n_i − n_gi)(n_j − n_gj) of a charge state.
pub(crate) fn kinetic(ec: &[[f64; 3]; 3], n_g: &[f64; 3], q: [i32; 3]) -> f64 {
    let d: [f64; 3] = std::array::from_fn(|i| q[i] as f64 - n_g[i]);
    let mut e = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            e += 4.0 * ec[i][j] * d[i] * d[j];
        }
    }
    e
}

/// Rhombus Hamiltonian in the truncated three-mode charge basis.
pub fn assemble_rhombus(circuit: &ReducedCircuit, basis: &ChargeBasis, gauge: Gauge) -> Result<HamiltonianMatrix> {
    if basis.modes() != 3 {
        return Err(Error::invalid("rhombus needs a three-mode basis"));
    }
    circuit.validate()?;
    let ej = circuit.junctions.energies();
    let (c, theta4) = gauge.phase_offsets(circuit.phi_ext);
    let dim = basis.dim();
    let mut triplets = Vec::with_capacity(dim * 9);
    for col in 0..dim {
        let q = basis.charges(col);
        triplets.push((col, col, Complex64::new(kinetic(&circuit.ec, &circuit.n_g, q), 0.0)));
        // −E_J cos(φ_i + c): e^{iφ} raises n_i.
        for (mode, &e) in ej.iter().take(3).enumerate() {
            let mut up = q;
            up[mode] += 1;
            if let Some(row) = basis.index_of(up) {
                let amp = Complex64::from_polar(-0.5 * e, c);
                triplets.push((row, col, amp));
                triplets.push((col, row, amp.conj()));
            }
        }
        // −E_J4 cos(Σφ − θ4): e^{iΣφ} raises all three charges.
        if ej[3] != 0.0 {
            if let Some(row) = basis.index_of([q[0] + 1, q[1] + 1, q[2] + 1]) {
                let amp = Complex64::from_polar(-0.5 * ej[3], -theta4);
                triplets.push((row, col, amp));
                triplets.push((col, row, amp.conj()));
            }
        }
    }
    HamiltonianMatrix {
        matrix: SparseMatrix::from_triplets(dim, triplets),
        gauge,
        basis: *basis,
        photons: None,
    }
    .checked()
}

/// Ideal charge-parity qubit: 4E_C(n − n_g)² on the diagonal and E_2/2
/// connecting n ↔ n+2 (potential +E_2 cos 2φ, minima at φ = ±π/2).
pub fn assemble_cp_qubit(e_c: f64, e_2: f64, n_g: f64, n_max: usize) -> Result<HamiltonianMatrix> {
    if n_max < 2 {
        return Err(Error::invalid("charge-parity qubit needs n_max ≥ 2"));
    }
    if !(e_c.is_finite() && e_2.is_finite() && n_g.is_finite()) || e_c <= 0.0 {
        return Err(Error::invalid("charge-parity qubit parameters must be finite with E_C > 0"));
    }
    let basis = ChargeBasis::new(n_max, 1)?;
    let mut triplets = Vec::new();
    for i in 0..basis.dim() {
        let n = basis.charges(i)[0];
        triplets.push((i, i, Complex64::new(4.0 * e_c * (n as f64 - n_g).powi(2), 0.0)));
        if let Some(j) = basis.index_of([n + 2, 0, 0]) {
            triplets.push((j, i, Complex64::new(0.5 * e_2, 0.0)));
            triplets.push((i, j, Complex64::new(0.5 * e_2, 0.0)));
        }
    }
    HamiltonianMatrix {
        matrix: SparseMatrix::from_triplets(basis.dim(), triplets),
        gauge: Gauge::SingleJunction,
        basis,
        photons: None,
    }
    .checked()
}

/// Single transmon-like mode 4E_C(n − n_g)² − E_J cos φ.
pub fn assemble_single_mode(e_c: f64, e_j: f64, n_g: f64, n_max: usize) -> Result<HamiltonianMatrix> {
    let basis = ChargeBasis::new(n_max, 1)?;
    let mut triplets = Vec::new();
    for i in 0..basis.dim() {
        let n = basis.charges(i)[0];
        triplets.push((i, i, Complex64::new(4.0 * e_c * (n as f64 - n_g).powi(2), 0.0)));
        if let Some(j) = basis.index_of([n + 1, 0, 0]) {
            triplets.push((j, i, Complex64::new(-0.5 * e_j, 0.0)));
            triplets.push((i, j, Complex64::new(-0.5 * e_j, 0.0)));
        }
    }
    HamiltonianMatrix {
        matrix: SparseMatrix::from_triplets(basis.dim(), triplets),
        gauge: Gauge::SingleJunction,
        basis,
        photons: None,
    }
    .checked()
}
