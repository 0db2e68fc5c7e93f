use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{charge_dispersion, flux_curvature, matrix_element, OperatorTag, CURVATURE_STEP};
use crate::circuit::{JunctionSet, ReducedCircuit};
use crate::error::{Error, Result};
use crate::hilbert::{assemble_rhombus, ChargeBasis, Gauge};
use crate::solver::{build_pool, eigensolve, SolverSettings};

/// Qubit figures of merit at one junction asymmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryPoint {
    pub alpha: f64,
    /// GHz.
    pub f01: f64,
    /// f01 change under half a period of n_g1 (GHz).
    pub dispersion: f64,
    /// |⟨0|n̂_1|1⟩|.
    pub n1: f64,
    /// |⟨0|sin φ̂_1|1⟩|.
    pub sin1: f64,
    /// |⟨0|sin(φ̂_1/2)|1⟩|.
    pub sinhalf1: f64,
    /// ∂²f01/∂Φ² (GHz/Φ0²).
    pub curvature: f64,
}

/// Figures of merit of `circuit` at its own flux and offsets.
pub fn asymmetry_point(circuit: &ReducedCircuit, basis: &ChargeBasis, settings: &SolverSettings) -> Result<AsymmetryPoint> {
    let gauge = Gauge::SingleJunction;
    let eig = eigensolve(&assemble_rhombus(circuit, basis, gauge)?, 2, settings)?;
    let (a, b) = (&eig.vectors[0], &eig.vectors[1]);
    let element = |tag| -> Result<f64> { Ok(matrix_element(tag, a, b, circuit, basis, gauge)?.magnitude) };
    Ok(AsymmetryPoint {
        alpha: circuit.junctions.alpha(),
        f01: eig.f01(),
        dispersion: charge_dispersion(circuit, basis, (0, 1), settings)?,
        n1: element(OperatorTag::Charge(0))?,
        sin1: element(OperatorTag::Sin(0))?,
        sinhalf1: element(OperatorTag::HalfSin(0))?,
        curvature: flux_curvature(circuit, basis, CURVATURE_STEP, settings)?,
    })
}

/// Sweep E_J^(4) = α·mean(base) with junctions 1–3 at `base`, on `workers`
/// threads (0 = all cores); rows follow `alphas`.
pub fn asymmetry_scan(
    template: &ReducedCircuit,
    base: [f64; 3],
    alphas: &[f64],
    basis: &ChargeBasis,
    settings: &SolverSettings,
    workers: usize,
) -> Result<Vec<AsymmetryPoint>> {
    if alphas.is_empty() {
        return Err(Error::invalid("empty asymmetry grid"));
    }
    let pool = build_pool(workers)?;
    pool.install(|| {
        alphas
            .par_iter()
            .enumerate()
            .map(|(index, &alpha)| {
                JunctionSet::with_alpha(base, alpha)
                    .and_then(|j| asymmetry_point(&template.with_junctions(j), basis, settings))
                    .map_err(|e| Error::Sweep { index, source: Box::new(e) })
            })
            .collect()
    })
}

/// `alpha,f01_ghz,dispersion_ghz,n1,sin1,sinhalf1,curvature_ghz_per_phi0_sq`.
pub fn write_asymmetry_csv<W: Write>(out: &mut W, rows: &[AsymmetryPoint], header: &[(String, String)]) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "alpha,f01_ghz,dispersion_ghz,n1,sin1,sinhalf1,curvature_ghz_per_phi0_sq")?;
    for r in rows {
        writeln!(
            out,
            "{:.6},{:.10},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.alpha, r.f01, r.dispersion, r.n1, r.sin1, r.sinhalf1, r.curvature
        )?;
    }
    Ok(())
}
