//! Recover the fourth junction and the resonator frequency from synthetic
//! two-tone spectroscopy with 1 MHz scatter.
//!
//! ```bash
//! cargo run --release --example fit_spectroscopy
//! ```

use rhombus::fit::{fit, synthetic_dataset, DeviceParams, FitProblem, ParameterGroup, SpectroscopyModel, TransitionLabel};

fn main() -> rhombus::Result<()> {
    let model = SpectroscopyModel { n_max: 3, qubit_levels: 4, ..SpectroscopyModel::default() };
    let truth = DeviceParams::fitted_device();
    let fluxes: Vec<f64> = (0..8).map(|i| 0.2 + 0.04 * i as f64).collect();
    let labels = [TransitionLabel::T01, TransitionLabel::T02, TransitionLabel::Resonator];
    let data = synthetic_dataset(&model, &truth, &fluxes, &labels, 1e-3, 3)?;
    println!("{} synthetic transitions", data.len());

    let mut guess = truth.clone();
    guess.set("ej4", 1.04 * truth.get("ej4")?)?;
    guess.set("f_res", truth.get("f_res")? - 0.01)?;

    let (ej4, f_res) = (truth.get("ej4")?, truth.get("f_res")?);
    let problem = FitProblem {
        groups: vec![
            ParameterGroup::single("ej4", 0.9 * ej4, 1.1 * ej4),
            ParameterGroup::single("f_res", f_res - 0.05, f_res + 0.05),
        ],
        model,
        ..FitProblem::default()
    };
    let report = fit(&problem, &data, &guess)?;
    println!(
        "cost {:.3e} -> {:.3e} in {} evaluations (converged: {})",
        report.initial_cost, report.final_cost, report.evaluations, report.converged
    );
    for name in &report.free {
        println!("  {name:<6} fitted {:.5}  truth {:.5}", report.fitted[name], truth.get(name)?);
    }
    println!("rms residual {:.2} MHz", 1e3 * report.rms_residual_ghz);
    Ok(())
}
