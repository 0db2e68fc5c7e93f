//! Offset-charge sensitivity: f01 against n_g1 at the sweet spot and in
//! the plasmon regime, plus the peak-to-peak dispersion of each.
//!
//! ```bash
//! cargo run --release --example charge_dispersion
//! ```

use rhombus::circuit::ReducedCircuit;
use rhombus::hilbert::ChargeBasis;
use rhombus::observables::charge_dispersion;
use rhombus::solver::{charge_sweep, SolverSettings, SweepSettings};

fn main() -> rhombus::Result<()> {
    let settings = SweepSettings { n_max: 5, max_n_max: 7, k: 2, ..SweepSettings::default() };
    let basis = ChargeBasis::rhombus(5)?;
    let offsets: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();

    for flux in [0.5, 0.0] {
        let circuit = ReducedCircuit::fitted_device(flux);
        let sweep = charge_sweep(&circuit, 0, &offsets, &settings)?;
        println!("flux = {flux} Φ0");
        for (ng, f) in offsets.iter().zip(sweep.transition(0, 1)) {
            println!("  n_g1 = {ng:.3}  f01 = {f:.6} GHz");
        }
        let d = charge_dispersion(&circuit, &basis, (0, 1), &SolverSettings::default())?;
        println!("  dispersion = {:.3} MHz\n", 1e3 * d);
    }
    Ok(())
}
