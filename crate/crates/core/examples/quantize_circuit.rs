//! Reduce a four-node capacitance network to the three-mode charging-energy
//! matrix and the resonator/drive coupling vectors.
//!
//! ```bash
//! cargo run --example quantize_circuit
//! ```

use rhombus::circuit::{assemble_capacitance_matrix, reduce_to_three_modes, CapacitanceNetwork, JunctionSet};

fn main() -> rhombus::Result<()> {
    // Four islands around the loop, each 4.5 fF to its neighbours.
    let mut net = CapacitanceNetwork::grounded([2.0, 1.5, 2.0, 1.5]);
    for i in 0..4 {
        net.set_pair(i, (i + 1) % 4, 4.5);
    }
    net.res = [0.0, 3.0, 0.0, 0.0];
    net.drive = [0.0, 0.0, 0.4, 0.0];

    println!("node capacitance matrix (fF):\n{}", assemble_capacitance_matrix(&net)?);

    let junctions = JunctionSet::with_alpha([12.0, 12.0, 12.0], 0.7)?;
    let circuit = reduce_to_three_modes(&net, junctions, [0.0; 3], 0.5)?;
    println!("reduced charging energies (GHz):");
    for row in circuit.ec {
        println!("  {:>9.4} {:>9.4} {:>9.4}", row[0], row[1], row[2]);
    }
    println!("E_J (GHz): {:?}, alpha = {:.3}", circuit.junctions.energies(), circuit.junctions.alpha());
    println!("beta_res   = {:?}", circuit.beta_res.unwrap());
    println!("beta_drive = {:?}", circuit.beta_drive.unwrap());
    Ok(())
}
