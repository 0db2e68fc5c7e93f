//! Relaxation and dephasing channels at a few bias points, for the fitted
//! device coupled to its readout resonator.
//!
//! ```bash
//! cargo run --release --example coherence_budget
//! ```

use rhombus::circuit::ReducedCircuit;
use rhombus::hilbert::{ChargeBasis, ResonatorModel};
use rhombus::noise::{coherence_budget, NoiseEnvironment};
use rhombus::solver::SolverSettings;

fn main() -> rhombus::Result<()> {
    let env = NoiseEnvironment::fig6();
    let basis = ChargeBasis::rhombus(6)?;
    let res = ResonatorModel::fitted_device();
    let settings = SolverSettings::default();

    for flux in [0.0, 0.3, 0.45, 0.5] {
        let c = ReducedCircuit::fitted_device(flux);
        let r = coherence_budget(&c, &basis, &env, Some(&res), &settings)?;
        println!("Φ = {flux:.2} Φ0, f01 = {:.4} GHz", r.f01);
        let show = |name: &str, rate: Option<f64>| {
            if let Some(g) = rate {
                println!("  {name:<12} Γ = {g:>10.3e} /s");
            }
        };
        show("dielectric", r.dielectric);
        show("purcell", r.purcell);
        show("flux", r.flux);
        show("quasipart.", Some(r.qp_total()));
        println!("  T1 = {:.3e} s, Tφ ramsey = {:.3e} s, Tφ echo = {:.3e} s", r.t1(), r.t_phi_ramsey(), r.t_phi_echo());
    }
    Ok(())
}
