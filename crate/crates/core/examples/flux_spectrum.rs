//! Lowest levels of the fitted device across half a flux quantum, with the
//! truncation raised per point until the levels stop moving.
//!
//! ```bash
//! cargo run --release --example flux_spectrum
//! ```

use rhombus::circuit::ReducedCircuit;
use rhombus::solver::{flux_sweep, SweepSettings};

fn main() -> rhombus::Result<()> {
    let circuit = ReducedCircuit::fitted_device(0.0);
    let settings = SweepSettings { n_max: 4, max_n_max: 8, k: 4, ..SweepSettings::default() };
    let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();

    let result = flux_sweep(&circuit, &grid, &settings)?;
    let (f01, f02) = (result.transition(0, 1), result.transition(0, 2));
    println!("{:>8} {:>5} {:>10} {:>10}", "flux", "n_max", "f01 (GHz)", "f02 (GHz)");
    for (i, p) in result.points.iter().enumerate() {
        println!("{:>8.3} {:>5} {:>10.4} {:>10.4}", p.param, p.n_max, f01[i], f02[i]);
    }
    Ok(())
}
