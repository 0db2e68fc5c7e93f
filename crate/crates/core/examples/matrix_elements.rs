//! Transition matrix elements ⟨0|Ô|1⟩ for the operators the noise model
//! couples to, and the flux slope two ways.
//!
//! ```bash
//! cargo run --release --example matrix_elements
//! ```

use rhombus::circuit::ReducedCircuit;
use rhombus::hilbert::{assemble_rhombus, ChargeBasis, Gauge};
use rhombus::observables::{flux_slope, hellmann_feynman_slope, matrix_element, OperatorTag};
use rhombus::solver::{eigensolve, SolverSettings};

fn main() -> rhombus::Result<()> {
    let settings = SolverSettings::default();
    let basis = ChargeBasis::rhombus(5)?;
    let circuit = ReducedCircuit::fitted_device(0.45);
    let gauge = Gauge::SingleJunction;
    let eig = eigensolve(&assemble_rhombus(&circuit, &basis, gauge)?, 2, &settings)?;

    let tags = [
        OperatorTag::Charge(0),
        OperatorTag::CombinedCharge(0),
        OperatorTag::ResonatorCharge,
        OperatorTag::Sin(0),
        OperatorTag::Sin(3),
        OperatorTag::HalfSin(0),
        OperatorTag::HalfSin(3),
        OperatorTag::FluxCoupling,
    ];
    for tag in tags {
        let m = matrix_element(tag, &eig.vectors[0], &eig.vectors[1], &circuit, &basis, gauge)?;
        println!("{:<10} |⟨0|O|1⟩| = {:.4e}", tag.to_string(), m.magnitude);
    }

    let fd = flux_slope(&circuit, &basis, 1e-4, &settings)?;
    let hf = hellmann_feynman_slope(&circuit, &basis, &settings)?;
    println!("∂f01/∂Φ: finite difference {fd:.4} GHz/Φ0, Hellmann–Feynman {hf:.4} GHz/Φ0");
    Ok(())
}
