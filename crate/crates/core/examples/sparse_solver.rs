//! Dense versus iterative diagonalization on the same Hamiltonian: the
//! iterative path is what makes large truncations affordable.
//!
//! ```bash
//! cargo run --release --example sparse_solver
//! ```

use std::time::Instant;

use rhombus::circuit::ReducedCircuit;
use rhombus::hilbert::{assemble_rhombus, ChargeBasis, Gauge};
use rhombus::solver::{eigensolve_dense, eigensolve_iterative, SolverSettings};

fn main() -> rhombus::Result<()> {
    let circuit = ReducedCircuit::fitted_device(0.3);
    let settings = SolverSettings::default();
    for n_max in [3, 4, 5] {
        let basis = ChargeBasis::rhombus(n_max)?;
        let h = assemble_rhombus(&circuit, &basis, Gauge::SingleJunction)?;

        let t = Instant::now();
        let dense = eigensolve_dense(&h.matrix, 4)?;
        let t_dense = t.elapsed();
        let t = Instant::now();
        let iter = eigensolve_iterative(&h.matrix, 4, &settings)?;
        let t_iter = t.elapsed();

        let worst = dense.energies.iter().zip(&iter.energies).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "dim {:>5}: dense {:>9.2?}, iterative {:>9.2?}, max |ΔE| = {worst:.1e} GHz, nnz = {}",
            basis.dim(),
            t_dense,
            t_iter,
            h.matrix.nnz()
        );
    }
    Ok(())
}
