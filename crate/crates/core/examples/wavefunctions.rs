//! Ground and excited states near half flux: charge-parity weights, the
//! phase-space picture and the classical minima they sit in.
//!
//! ```bash
//! cargo run --release --example wavefunctions
//! ```

use rhombus::circuit::ReducedCircuit;
use rhombus::hilbert::{assemble_rhombus, ChargeBasis, Gauge};
use rhombus::observables::{
    classical_minima, prohibited_charge_weight, support_overlap, to_phase_grid, Parity,
};
use rhombus::solver::{eigensolve, SolverSettings};

fn main() -> rhombus::Result<()> {
    let circuit = ReducedCircuit::fitted_device(0.49);
    let basis = ChargeBasis::rhombus(6)?;
    let h = assemble_rhombus(&circuit, &basis, Gauge::SingleJunction)?;
    let eig = eigensolve(&h, 2, &SolverSettings::default())?;
    println!("f01 = {:.4} GHz", eig.f01());

    for (level, parity) in [(0, Parity::Ground), (1, Parity::Excited)] {
        let w = prohibited_charge_weight(&eig.vectors[level], &basis, parity)?;
        println!("level {level}: weight on forbidden charge sectors = {w:.3e}");
    }

    let ground = to_phase_grid(&eig.vectors[0], &basis, 24)?;
    let excited = to_phase_grid(&eig.vectors[1], &basis, 24)?;
    println!("support overlap of |ψ0|² and |ψ1|² = {:.4}", support_overlap(&ground, &excited)?);

    // A φ3 = 0 slice of the ground-state density, as "φ1 φ2 |ψ|²" rows.
    let mut slice = Vec::new();
    ground.write_slice(&mut slice, 2, 0.0)?;
    println!("ground-state slice: {} rows", String::from_utf8_lossy(&slice).lines().count());

    let minima = classical_minima(&circuit);
    for m in &minima.minima {
        println!("minimum at φ = [{:+.3}, {:+.3}, {:+.3}], U = {:.3} GHz", m.phi[0], m.phi[1], m.phi[2], m.energy);
    }
    Ok(())
}
