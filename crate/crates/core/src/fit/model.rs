use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TransitionDataset, TransitionLabel};
use crate::circuit::{JunctionSet, ReducedCircuit};
use crate::error::{Error, Result};
use crate::hilbert::{assemble_composite_truncated, assemble_rhombus, charge_operator, ChargeBasis, Gauge, ResonatorModel};
use crate::solver::{dense_hermitian, eigensolve, eigensolve_iterative_from, SolverSettings};

/// Names of every adjustable device parameter.
pub const PARAMETER_NAMES: [&str; 14] = [
    "ec11", "ec22", "ec33", "ec12", "ec13", "ec23", "ej1", "ej2", "ej3", "ej4", "beta1", "beta2", "beta3", "f_res",
];

/// Circuit plus readout resonator: everything the spectroscopy model needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub circuit: ReducedCircuit,
    pub resonator: ResonatorModel,
}

impl DeviceParams {
    pub fn fitted_device() -> Self {
        Self {
            circuit: ReducedCircuit::fitted_device(0.0),
            resonator: ResonatorModel::fitted_device(),
        }
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        let c = &self.circuit;
        let beta = c.beta_res.unwrap_or([0.0; 3]);
        Ok(match name {
            "ec11" => c.ec[0][0],
            "ec22" => c.ec[1][1],
            "ec33" => c.ec[2][2],
            "ec12" => c.ec[0][1],
            "ec13" => c.ec[0][2],
            "ec23" => c.ec[1][2],
            "ej1" => c.junctions.get(0),
            "ej2" => c.junctions.get(1),
            "ej3" => c.junctions.get(2),
            "ej4" => c.junctions.get(3),
            "beta1" => beta[0],
            "beta2" => beta[1],
            "beta3" => beta[2],
            "f_res" => self.resonator.f_res,
            other => return Err(Error::invalid(format!("unknown parameter `{other}`"))),
        })
    }

    /// Set one parameter; off-diagonal charging energies stay symmetric.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let c = &mut self.circuit;
        let mut set_ej = |j: usize| -> Result<()> {
            let mut e = c.junctions.energies();
            e[j] = value;
            c.junctions = JunctionSet::new(e)?;
            Ok(())
        };
        match name {
            "ej1" => return set_ej(0),
            "ej2" => return set_ej(1),
            "ej3" => return set_ej(2),
            "ej4" => return set_ej(3),
            _ => {}
        }
        let mut set_beta = |i: usize| {
            let mut b = c.beta_res.unwrap_or([0.0; 3]);
            b[i] = value;
            c.beta_res = Some(b);
        };
        match name {
            "ec11" => c.ec[0][0] = value,
            "ec22" => c.ec[1][1] = value,
            "ec33" => c.ec[2][2] = value,
            "ec12" => (c.ec[0][1], c.ec[1][0]) = (value, value),
            "ec13" => (c.ec[0][2], c.ec[2][0]) = (value, value),
            "ec23" => (c.ec[1][2], c.ec[2][1]) = (value, value),
            "beta1" => set_beta(0),
            "beta2" => set_beta(1),
            "beta3" => set_beta(2),
            "f_res" => self.resonator.f_res = value,
            other => return Err(Error::invalid(format!("unknown parameter `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        ResonatorModel::new(self.resonator.f_res, self.resonator.z_r, self.resonator.n_photon_max)?;
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        PARAMETER_NAMES.iter().map(|&n| (n.to_string(), self.get(n).expect("known name"))).collect()
    }
}

/// Truncation of the coupled qubit–resonator spectroscopy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectroscopyModel {
    /// Charge truncation of the bare qubit.
    pub n_max: usize,
    /// Bare qubit levels kept in the coupled model.
    pub qubit_levels: usize,
    pub solver: SolverSettings,
}

impl Default for SpectroscopyModel {
    fn default() -> Self {
        Self {
            n_max: 4,
            qubit_levels: 6,
            // Energy errors scale as the squared residual: 1e-7 of the
            // spectral range is far below any spectroscopic linewidth.
            solver: SolverSettings { tol: 1e-7, krylov_buffer: 4, ..SolverSettings::default() },
        }
    }
}

/// Dressed transition frequencies at one flux, in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedTransitions {
    pub flux: f64,
    pub t01: f64,
    pub t02: f64,
    pub t12: f64,
    pub resonator: f64,
}

impl DressedTransitions {
    pub fn get(&self, label: TransitionLabel) -> Option<f64> {
        match label {
            TransitionLabel::T01 => Some(self.t01),
            TransitionLabel::T02 => Some(self.t02),
            TransitionLabel::T12 => Some(self.t12),
            TransitionLabel::Resonator => Some(self.resonator),
            TransitionLabel::Unassigned => None,
        }
    }

    /// The modeled transition closest to `freq`; ties go to the first in
    /// [`TransitionLabel::MODELED`] order.
    pub fn nearest(&self, freq: f64) -> (TransitionLabel, f64) {
        let mut best = (TransitionLabel::T01, self.t01);
        for l in TransitionLabel::MODELED {
            let v = self.get(l).expect("modeled");
            if (v - freq).abs() < (best.1 - freq).abs() {
                best = (l, v);
            }
        }
        best
    }
}

impl SpectroscopyModel {
    pub fn validate(&self) -> Result<()> {
        if self.qubit_levels < 3 {
            return Err(Error::invalid("the spectroscopy model needs at least three qubit levels"));
        }
        ChargeBasis::rhombus(self.n_max)?;
        Ok(())
    }

    /// Dressed transitions at one flux. Each dressed level is identified
    /// with the bare product state |qubit, photons⟩ it overlaps most.
    pub fn transitions_at(&self, params: &DeviceParams, flux: f64) -> Result<DressedTransitions> {
        Ok(self.transitions_seeded(params, flux, &[])?.0)
    }

    /// As [`transitions_at`](Self::transitions_at), seeding the iterative
    /// solver with `guess` (bare eigenvectors of a nearby parameter set);
    /// also returns this point's bare eigenvectors for the next call.
    pub fn transitions_seeded(
        &self,
        params: &DeviceParams,
        flux: f64,
        guess: &[Vec<Complex64>],
    ) -> Result<(DressedTransitions, Vec<Vec<Complex64>>)> {
        let circuit = params.circuit.with_flux(flux);
        let basis = ChargeBasis::rhombus(self.n_max)?;
        let h = assemble_rhombus(&circuit, &basis, Gauge::SingleJunction)?;
        let bare = if h.dim() > self.solver.dense_threshold && !guess.is_empty() {
            eigensolve_iterative_from(&h.matrix, self.qubit_levels, &self.solver, guess)?
        } else {
            eigensolve(&h, self.qubit_levels, &self.solver)?
        };
        let beta = circuit.beta_res.unwrap_or([0.0; 3]);
        let mut n_beta = crate::hilbert::SparseMatrix::from_triplets(basis.dim(), vec![]);
        for (mode, &b) in beta.iter().enumerate() {
            n_beta = n_beta.add(&charge_operator(mode, &basis)?.scale(Complex64::new(b, 0.0)));
        }
        let k = bare.len();
        let coupling = DMatrix::from_fn(k, k, |a, b| n_beta.expectation(&bare.vectors[a], &bare.vectors[b]));
        let res = &params.resonator;
        let levels = res.n_photon_max + 1;
        let h = assemble_composite_truncated(&bare.energies, &coupling, res);
        let dressed = dense_hermitian(&h, k * levels);
        let level_of = |q: usize, m: usize| -> f64 {
            let idx = q * levels + m;
            let best = (0..dressed.len())
                .max_by(|&i, &j| dressed.vectors[i][idx].norm_sqr().total_cmp(&dressed.vectors[j][idx].norm_sqr()))
                .expect("non-empty");
            dressed.energies[best]
        };
        let e00 = level_of(0, 0);
        let (e10, e20) = (level_of(1, 0), level_of(2, 0));
        let t = DressedTransitions {
            flux,
            t01: e10 - e00,
            t02: e20 - e00,
            t12: e20 - e10,
            resonator: level_of(0, 1) - e00,
        };
        Ok((t, bare.vectors))
    }

    /// Transitions at each flux, evaluated in parallel on the current rayon
    /// pool; order follows `fluxes`.
    pub fn transitions(&self, params: &DeviceParams, fluxes: &[f64]) -> Result<Vec<DressedTransitions>> {
        fluxes.par_iter().map(|&f| self.transitions_at(params, f)).collect()
    }

    /// Model frequencies for explicit (flux, label) pairs; unassigned labels
    /// are not allowed here.
    pub fn model_transitions(&self, params: &DeviceParams, flux: f64, labels: &[TransitionLabel]) -> Result<Vec<f64>> {
        let t = self.transitions_at(params, flux)?;
        labels
            .iter()
            .map(|&l| t.get(l).ok_or_else(|| Error::invalid("cannot model an unassigned transition")))
            .collect()
    }
}

/// Residual penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    Squared,
    /// Squared residuals capped at `cap²` (GHz²), to blunt outliers.
    Capped { cap: f64 },
}

impl Loss {
    fn apply(self, r: f64) -> f64 {
        match self {
            Loss::Squared => r * r,
            Loss::Capped { cap } => (r * r).min(cap * cap),
        }
    }
}

/// Per-row residuals (model − data, GHz) and the weighted cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub residuals: Vec<f64>,
    /// Label each row was compared against.
    pub assigned: Vec<TransitionLabel>,
    pub cost: f64,
}

/// Compare a dataset with precomputed model transitions (one per distinct
/// flux, in the dataset's flux order).
pub fn residuals_from(dataset: &TransitionDataset, model: &[DressedTransitions], loss: Loss) -> Result<Residuals> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = Residuals {
        residuals: Vec::with_capacity(dataset.len()),
        assigned: Vec::with_capacity(dataset.len()),
        cost: 0.0,
    };
    let mut k = 0;
    for row in dataset.rows() {
        while k < model.len() && model[k].flux != row.flux {
            k += 1;
        }
        let t = model.get(k).ok_or_else(|| Error::invalid(format!("no model point at flux {}", row.flux)))?;
        let (label, f) = match t.get(row.label) {
            Some(f) => (row.label, f),
            None => t.nearest(row.freq),
        };
        let r = f - row.freq;
        out.residuals.push(r);
        out.assigned.push(label);
        out.cost += row.weight * loss.apply(r);
    }
    Ok(out)
}

/// Residuals of `dataset` against the model at `params`.
pub fn residuals(
    model: &SpectroscopyModel,
    dataset: &TransitionDataset,
    params: &DeviceParams,
    loss: Loss,
) -> Result<Residuals> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let t = model.transitions(params, &dataset.flux_points())?;
    residuals_from(dataset, &t, loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::TransitionPoint;

    fn quick() -> SpectroscopyModel {
        SpectroscopyModel {
            n_max: 4,
            ..SpectroscopyModel::default()
        }
    }

    #[test]
    fn parameters_round_trip() {
        let mut p = DeviceParams::fitted_device();
        for (i, name) in PARAMETER_NAMES.iter().enumerate() {
            let v = p.get(name).unwrap() + 0.001 * (i + 1) as f64;
            p.set(name, v).unwrap();
            assert_eq!(p.get(name).unwrap(), v);
        }
        assert_eq!(p.circuit.ec[1][0], p.circuit.ec[0][1]);
        assert!(p.get("ej5").is_err());
        assert!(p.set("ej1", -1.0).is_err());
    }

    #[test]
    fn zero_coupling_gives_bare_spectrum() {
        let mut p = DeviceParams::fitted_device();
        p.circuit.beta_res = Some([0.0; 3]);
        let m = quick();
        let t = m.transitions_at(&p, 0.45).unwrap();
        let basis = ChargeBasis::rhombus(m.n_max).unwrap();
        let h = assemble_rhombus(&p.circuit.with_flux(0.45), &basis, Gauge::SingleJunction).unwrap();
        let bare = eigensolve(&h, 3, &m.solver).unwrap();
        assert!((t.t01 - bare.f01()).abs() < 1e-9);
        assert!((t.t02 - bare.transition(0, 2)).abs() < 1e-9);
        assert!((t.resonator - p.resonator.f_res).abs() < 1e-12);
    }

    #[test]
    fn resonant_branches_split_symmetrically() {
        let m = quick();
        let mut p = DeviceParams::fitted_device();
        let flux = 0.45;
        p.circuit.beta_res = Some([0.0; 3]);
        let f01 = m.transitions_at(&p, flux).unwrap().t01;
        p = DeviceParams::fitted_device();
        p.resonator.f_res = f01;
        // Two-level oracle: splitting 2g with g = scale·|⟨0|Σβn|1⟩|.
        let basis = ChargeBasis::rhombus(m.n_max).unwrap();
        let h = assemble_rhombus(&p.circuit.with_flux(flux), &basis, Gauge::SingleJunction).unwrap();
        let bare = eigensolve(&h, 2, &m.solver).unwrap();
        let beta = p.circuit.beta_res.unwrap();
        let mut nb = crate::hilbert::SparseMatrix::from_triplets(basis.dim(), vec![]);
        for (i, &b) in beta.iter().enumerate() {
            nb = nb.add(&charge_operator(i, &basis).unwrap().scale(Complex64::new(b, 0.0)));
        }
        let g = p.resonator.coupling_scale_ghz() * nb.expectation(&bare.vectors[0], &bare.vectors[1]).norm();
        let t = m.transitions_at(&p, flux).unwrap();
        let (lo, hi) = (t.t01.min(t.resonator), t.t01.max(t.resonator));
        assert!(((hi - lo) / (2.0 * g) - 1.0).abs() < 0.05, "split {} vs 2g {}", hi - lo, 2.0 * g);
        let centre = 0.5 * (hi + lo);
        assert!((centre - f01).abs() < 0.1 * g, "centre {centre} vs {f01}");
    }

    #[test]
    fn residuals_vanish_at_truth_and_assign_nearest() {
        let m = quick();
        let p = DeviceParams::fitted_device();
        let fluxes = [0.1, 0.3, 0.45];
        let t = m.transitions(&p, &fluxes).unwrap();
        let mut rows = Vec::new();
        for tr in &t {
            for l in TransitionLabel::MODELED {
                rows.push(TransitionPoint { flux: tr.flux, freq: tr.get(l).unwrap(), label: l, weight: 1.0 });
            }
        }
        let d = TransitionDataset::new(rows.clone()).unwrap();
        let r = residuals(&m, &d, &p, Loss::Squared).unwrap();
        assert!(r.cost < 1e-20);

        // Ten unassigned rows near assorted branches; nearest-branch choice
        // must match an exhaustive search over all labels.
        let mut un = Vec::new();
        for (i, row) in rows.iter().take(10).enumerate() {
            un.push(TransitionPoint { freq: row.freq + 0.013 * (i as f64 - 4.5), label: TransitionLabel::Unassigned, ..*row });
        }
        let d = TransitionDataset::new(un).unwrap();
        let r = residuals_from(&d, &t, Loss::Squared).unwrap();
        for (row, (res, label)) in d.rows().iter().zip(r.residuals.iter().zip(&r.assigned)) {
            let tr = t.iter().find(|x| x.flux == row.flux).unwrap();
            let best = TransitionLabel::MODELED
                .iter()
                .map(|&l| (tr.get(l).unwrap() - row.freq).abs())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(res.abs(), best);
            assert_eq!((tr.get(*label).unwrap() - row.freq).abs(), best);
        }
    }

    #[test]
    fn capped_loss_limits_outliers() {
        assert!((Loss::Capped { cap: 0.1 }.apply(5.0) - 0.01).abs() < 1e-15);
        assert!((Loss::Capped { cap: 0.1 }.apply(0.05) - 0.0025).abs() < 1e-15);
    }
}
