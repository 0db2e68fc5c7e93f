//! How the fourth junction sets the qubit: frequency, charge dispersion,
//! matrix elements and flux curvature against α = E_J4 / mean(E_J1..3).
//!
//! ```bash
//! cargo run --release --example asymmetry_scan
//! ```

use rhombus::circuit::ReducedCircuit;
use rhombus::hilbert::ChargeBasis;
use rhombus::observables::{asymmetry_scan, write_asymmetry_csv};
use rhombus::solver::SolverSettings;

fn main() -> rhombus::Result<()> {
    let circuit = ReducedCircuit::fitted_device(0.5);
    let e = circuit.junctions.energies();
    let alphas = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
    let rows = asymmetry_scan(
        &circuit,
        [e[0], e[1], e[2]],
        &alphas,
        &ChargeBasis::rhombus(5)?,
        &SolverSettings::default(),
        0,
    )?;
    write_asymmetry_csv(&mut std::io::stdout(), &rows, &[])?;
    Ok(())
}
