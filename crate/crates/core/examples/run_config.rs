//! Drive a calculation from a JSON run configuration, the same format the
//! `rhombus` binary reads.
//!
//! ```bash
//! cargo run --release --example run_config
//! ```

use rhombus::config::RunConfig;
use rhombus::solver::flux_sweep;

const CONFIG: &str = r#"{
    "circuit": {
        "junctions_ghz": [13.0, 13.0, 13.0, 9.0],
        "capacitances_fF": {
            "pair": [[0, 4.5, 0, 4.5], [0, 0, 4.5, 0], [0, 0, 0, 4.5], [0, 0, 0, 0]],
            "ground": [2.0, 1.5, 2.0, 1.5]
        },
        "flux_phi0": 0.5
    },
    "basis": { "n_max": 4, "max_n_max": 8, "tol_conv": 1e-4 },
    "sweeps": { "flux": { "start": 0.4, "stop": 0.5, "points": 5 } },
    "workers": 1
}"#;

fn main() -> rhombus::Result<()> {
    let cfg: RunConfig = serde_json::from_str(CONFIG)?;
    cfg.validate()?;
    let circuit = cfg.reduced_circuit()?;
    println!("ec diagonal (GHz): {:.4} {:.4} {:.4}", circuit.ec[0][0], circuit.ec[1][1], circuit.ec[2][2]);

    let spectrum = flux_sweep(&circuit, &cfg.sweeps.flux.values()?, &cfg.basis.sweep(cfg.workers))?;
    for (phi, f) in spectrum.grid.iter().zip(spectrum.transition(0, 1)) {
        println!("Φ = {phi:.3}  f01 = {f:.4} GHz");
    }
    Ok(())
}
