//! The protection mechanism in its simplest form: single Cooper-pair
//! tunneling through the rhombus interferes away at half flux, leaving
//! pair-of-pairs tunneling and a cos 2φ qubit with two disjoint parities.
//!
//! ```bash
//! cargo run --example charge_parity
//! ```

use rhombus::hilbert::assemble_cp_qubit;
use rhombus::observables::{delta_wavefunction, interferometer_transmission, Parity};
use rhombus::solver::eigensolve_dense;

fn main() -> rhombus::Result<()> {
    println!("two-path transmission of a single pair:");
    for phi in [0.0, 0.25, 0.4, 0.5] {
        println!("  Φ = {phi:.2}  T = {:.4}", interferometer_transmission(1.0, 1.0, phi)?);
    }

    // Only n ↔ n+2 tunneling: even and odd charge sectors never mix, so
    // the two lowest levels become degenerate once E_2 ≫ E_C.
    for e_2 in [1.0, 5.0, 20.0] {
        let h = assemble_cp_qubit(1.0, e_2, 0.3, 10)?;
        let eig = eigensolve_dense(&h.matrix, 2)?;
        println!("E_2/E_C = {e_2:>4}: f01 = {:.3e} GHz", eig.f01());
    }

    println!("two-delta charge amplitudes (Σn = 0..7):");
    for s in 0..8 {
        let n = [s, 0, 0];
        println!(
            "  Σn = {s}: ground {:+.3}, excited {:+.3}",
            delta_wavefunction(n, Parity::Ground),
            delta_wavefunction(n, Parity::Excited)
        );
    }
    Ok(())
}
