//! Hermitian eigensolvers and parameter sweeps.

mod lanczos;
mod sweep;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use sweep::{
    alpha_sweep, build_pool, charge_sweep, flux_sweep, solve_converged, ConvergedSolve, SpectrumPoint, SpectrumResult,
    SweepMetadata, SweepParameter, SweepSettings,
};

use crate::error::{Error, Result};
use crate::hilbert::{HamiltonianMatrix, SparseMatrix};

/// Numerical settings shared by every eigensolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Matrices up to this dimension are diagonalized densely.
    pub dense_threshold: usize,
    /// Residual tolerance relative to the spectral range.
    pub tol: f64,
    /// Matrix-vector product budget for the iterative path.
    pub max_matvecs: usize,
    /// Extra Ritz vectors retained beyond the requested count.
    pub krylov_buffer: usize,
    /// Seed of the iterative start vector.
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dense_threshold: 128,
            tol: 1e-11,
            max_matvecs: 40_000,
            krylov_buffer: 10,
            seed: 0x5eed,
        }
    }
}

/// Lowest eigenpairs of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending, in GHz.
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    /// ‖Hv − Ev‖ per pair.
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// E_b − E_a.
    pub fn transition(&self, a: usize, b: usize) -> f64 {
        self.energies[b] - self.energies[a]
    }

    pub fn f01(&self) -> f64 {
        self.transition(0, 1)
    }
}

/// Make the largest-magnitude amplitude real and positive.
pub(crate) fn fix_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let mut best = 0usize;
    let mut best_norm = -1.0;
    for (i, a) in v.iter().enumerate() {
        // Ties go to the lowest index; a small relative margin keeps the
        // choice stable against rounding.
        let n = a.norm();
        if n > best_norm * (1.0 + 1e-9) {
            best = i;
            best_norm = n;
        }
    }
    if best_norm > 0.0 {
        let phase = v[best].conj() / best_norm;
        v.iter_mut().for_each(|a| *a *= phase);
    }
    v
}

fn residual(h: &SparseMatrix, e: f64, v: &[Complex64]) -> f64 {
    let hv = h.mul_vec(v);
    hv.iter().zip(v).map(|(a, b)| (a - e * b).norm_sqr()).sum::<f64>().sqrt()
}

/// All eigenvalues of a Hermitian matrix, ascending (dense).
pub fn eigenvalues_dense(h: &SparseMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = h.to_dense().symmetric_eigenvalues().iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Lowest `k` eigenpairs by dense diagonalization.
pub fn eigensolve_dense(h: &SparseMatrix, k: usize) -> Result<EigenResult> {
    check_count(h.dim(), k)?;
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = EigenResult {
        energies: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    for &i in order.iter().take(k) {
        let v = fix_phase(eig.eigenvectors.column(i).iter().cloned().collect());
        let e = eig.eigenvalues[i];
        out.residuals.push(residual(h, e, &v));
        out.energies.push(e);
        out.vectors.push(v);
    }
    Ok(out)
}

/// Lowest `k` eigenpairs by restarted Lanczos.
pub fn eigensolve_iterative(h: &SparseMatrix, k: usize, settings: &SolverSettings) -> Result<EigenResult> {
    check_count(h.dim(), k)?;
    lanczos::lanczos(h, k, settings, &[])
}

/// Restarted Lanczos seeded with approximate eigenvectors, e.g. those of a
/// nearby Hamiltonian. Guesses of the wrong length are ignored.
pub fn eigensolve_iterative_from(
    h: &SparseMatrix,
    k: usize,
    settings: &SolverSettings,
    guess: &[Vec<Complex64>],
) -> Result<EigenResult> {
    check_count(h.dim(), k)?;
    lanczos::lanczos(h, k, settings, guess)
}

fn check_count(dim: usize, k: usize) -> Result<()> {
    if k == 0 || k >= dim {
        return Err(Error::invalid(format!("need 1 ≤ k < dim, got k = {k}, dim = {dim}")));
    }
    Ok(())
}

/// Lowest `k` eigenpairs, dense below `dense_threshold` and iterative above.
pub fn eigensolve(h: &HamiltonianMatrix, k: usize, settings: &SolverSettings) -> Result<EigenResult> {
    eigensolve_matrix(&h.matrix, k, settings)
}

pub fn eigensolve_matrix(h: &SparseMatrix, k: usize, settings: &SolverSettings) -> Result<EigenResult> {
    if h.dim() <= settings.dense_threshold {
        eigensolve_dense(h, k)
    } else {
        eigensolve_iterative(h, k, settings)
    }
}

/// Lowest `k` eigenpairs of a small dense Hermitian matrix.
pub(crate) fn dense_hermitian(m: &DMatrix<Complex64>, k: usize) -> EigenResult {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = EigenResult {
        energies: vec![],
        vectors: vec![],
        residuals: vec![],
    };
    for &i in order.iter().take(k) {
        out.energies.push(eig.eigenvalues[i]);
        out.vectors.push(fix_phase(eig.eigenvectors.column(i).iter().cloned().collect()));
        out.residuals.push(0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{assemble_single_mode, SparseMatrix};

    #[test]
    fn diagonal_matrix_gives_sorted_diagonal() {
        let d = [3.0, -1.0, 7.0, 0.5, 2.0];
        let h = SparseMatrix::from_diagonal(&d);
        let r = eigensolve_dense(&h, 3).unwrap();
        assert_eq!(r.energies, vec![-1.0, 0.5, 2.0]);
        let it = eigensolve_iterative(&h, 3, &SolverSettings::default()).unwrap();
        for (a, b) in it.energies.iter().zip(&r.energies) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_counts() {
        let h = SparseMatrix::from_diagonal(&[1.0, 2.0]);
        assert!(eigensolve_dense(&h, 0).is_err());
        assert!(eigensolve_dense(&h, 2).is_err());
    }

    #[test]
    fn transmon_frequency_matches_asymptotic() {
        let (ec, ej) = (0.25, 12.5);
        let h = assemble_single_mode(ec, ej, 0.0, 30).unwrap();
        let r = eigensolve(&h, 2, &SolverSettings::default()).unwrap();
        let asymptotic = (8.0 * ec * ej).sqrt() - ec;
        assert!((r.f01() - asymptotic).abs() / asymptotic < 0.01);
    }

    #[test]
    fn iterative_finds_degenerate_pairs() {
        let mut d: Vec<f64> = (0..300).map(|i| (i / 2) as f64).collect();
        d.reverse();
        let h = SparseMatrix::from_diagonal(&d);
        let r = eigensolve_iterative(&h, 4, &SolverSettings::default()).unwrap();
        assert_eq!(r.energies.iter().map(|e| e.round() as i64).collect::<Vec<_>>(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn phase_fixing_makes_largest_amplitude_positive() {
        let v = fix_phase(vec![Complex64::new(0.1, 0.0), Complex64::new(0.0, -0.9)]);
        assert!((v[1].re - 0.9).abs() < 1e-15 && v[1].im.abs() < 1e-15);
    }
}
