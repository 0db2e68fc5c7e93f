//! Recovering device parameters from spectroscopy data.
//!
//! The model couples the lowest bare qubit levels to the readout resonator
//! and labels dressed levels by their largest bare component. The optimizer
//! is a bounded Nelder–Mead simplex over normalized coordinates, restarted
//! around the best point when it stalls.

mod dataset;
mod model;

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use dataset::{TransitionDataset, TransitionLabel, TransitionPoint};
pub use model::{
    residuals, residuals_from, DeviceParams, DressedTransitions, Loss, Residuals, SpectroscopyModel, PARAMETER_NAMES,
};

use crate::error::{Error, Result};
use crate::solver::build_pool;

/// Parameters that move together, within a shared box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGroup {
    pub names: Vec<String>,
    pub lo: f64,
    pub hi: f64,
}

impl ParameterGroup {
    pub fn single(name: &str, lo: f64, hi: f64) -> Self {
        Self { names: vec![name.to_string()], lo, hi }
    }

    pub fn tied(names: &[&str], lo: f64, hi: f64) -> Self {
        Self { names: names.iter().map(|s| s.to_string()).collect(), lo, hi }
    }

    pub fn label(&self) -> String {
        self.names.join("=")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitProblem {
    /// Free parameters; everything else stays at the initial guess.
    pub groups: Vec<ParameterGroup>,
    pub max_evals: usize,
    /// Stop when the simplex costs agree to this fraction of the best cost...
    pub tol: f64,
    /// ...and every vertex lies within this fraction of each box width.
    pub x_tol: f64,
    /// Extra simplex restarts around the best point after a stall.
    pub restarts: usize,
    pub seed: u64,
    pub loss: Loss,
    pub model: SpectroscopyModel,
    /// Worker threads for per-flux evaluation; 0 uses every core.
    pub workers: usize,
}

impl Default for FitProblem {
    fn default() -> Self {
        Self {
            groups: Vec::new(),
            max_evals: 2000,
            tol: 1e-6,
            x_tol: 1e-4,
            restarts: 1,
            seed: 7,
            loss: Loss::Squared,
            model: SpectroscopyModel::default(),
            workers: 0,
        }
    }
}

impl FitProblem {
    /// Junction energies and resonator frequency free, each within ±`spread`
    /// (relative) of `center`.
    pub fn junctions_and_resonator(center: &DeviceParams, spread: f64) -> Result<Self> {
        let mut groups = Vec::new();
        for name in ["ej1", "ej2", "ej3", "ej4", "f_res"] {
            let v = center.get(name)?;
            groups.push(ParameterGroup::single(name, v * (1.0 - spread), v * (1.0 + spread)));
        }
        Ok(Self { groups, ..Self::default() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::invalid("no free parameters"));
        }
        let mut seen = Vec::new();
        for g in &self.groups {
            if g.names.is_empty() {
                return Err(Error::invalid("empty parameter group"));
            }
            if !(g.lo.is_finite() && g.hi.is_finite() && g.lo <= g.hi) {
                return Err(Error::invalid(format!("bounds of {} are not an interval", g.label())));
            }
            for n in &g.names {
                if !PARAMETER_NAMES.contains(&n.as_str()) {
                    return Err(Error::invalid(format!("unknown parameter `{n}`")));
                }
                if seen.contains(n) {
                    return Err(Error::invalid(format!("parameter `{n}` appears more than once")));
                }
                seen.push(n.clone());
            }
        }
        if self.max_evals == 0 {
            return Err(Error::invalid("max_evals must be positive"));
        }
        if !(self.tol >= 0.0 && self.x_tol >= 0.0) {
            return Err(Error::invalid("tolerances must be nonnegative"));
        }
        self.model.validate()
    }

    /// Write group values into a copy of `base`.
    fn apply(&self, base: &DeviceParams, values: &[f64]) -> Result<DeviceParams> {
        let mut p = *base;
        for (g, &v) in self.groups.iter().zip(values) {
            for n in &g.names {
                p.set(n, v)?;
            }
        }
        Ok(p)
    }

    fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        self.groups.iter().zip(u).map(|(g, &x)| g.lo + x * (g.hi - g.lo)).collect()
    }

    fn to_unit(&self, values: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .zip(values)
            .map(|(g, &v)| if g.hi > g.lo { (v - g.lo) / (g.hi - g.lo) } else { 0.0 })
            .collect()
    }
}

/// Outcome of a fit; serialized as the fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub free: Vec<String>,
    pub initial: BTreeMap<String, f64>,
    pub fitted: BTreeMap<String, f64>,
    pub fitted_params: DeviceParams,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best cost after every simplex iteration.
    pub trace: Vec<f64>,
    /// d²cost/dp² at the optimum per group (GHz² per unit², not a covariance).
    pub sensitivity: BTreeMap<String, f64>,
    pub rms_residual_ghz: f64,
}

impl FitReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

struct Objective<'a> {
    problem: &'a FitProblem,
    dataset: &'a TransitionDataset,
    base: DeviceParams,
    fluxes: Vec<f64>,
    /// Bare eigenvectors from the previous evaluation at each flux.
    seeds: Vec<Vec<Vec<Complex64>>>,
    evals: usize,
}

impl Objective<'_> {
    /// Cost at normalized coordinates; parameter sets the circuit rejects
    /// cost +∞ so the simplex backs away from them.
    fn cost(&mut self, u: &[f64]) -> Result<f64> {
        self.evals += 1;
        let params = match self.problem.apply(&self.base, &self.problem.to_physical(u)) {
            Ok(p) => p,
            Err(Error::InvalidInput(_)) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        if params.validate().is_err() {
            return Ok(f64::INFINITY);
        }
        let model = &self.problem.model;
        let t = self
            .fluxes
            .par_iter()
            .zip(self.seeds.par_iter_mut())
            .map(|(&flux, seed)| {
                let (t, vectors) = model.transitions_seeded(&params, flux, seed)?;
                *seed = vectors;
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(residuals_from(self.dataset, &t, self.problem.loss)?.cost)
    }
}

/// Bounded least-squares fit starting from `initial`. Tied groups start from
/// the value of their first member. Hitting `max_evals` is not an error: the
/// best point so far is returned with `converged = false`.
pub fn fit(problem: &FitProblem, dataset: &TransitionDataset, initial: &DeviceParams) -> Result<FitReport> {
    problem.validate()?;
    initial.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start: Vec<f64> = problem.groups.iter().map(|g| initial.get(&g.names[0])).collect::<Result<_>>()?;
    for (g, &v) in problem.groups.iter().zip(&start) {
        if v < g.lo || v > g.hi {
            return Err(Error::invalid(format!("initial {} = {v} lies outside [{}, {}]", g.label(), g.lo, g.hi)));
        }
    }
    let base = problem.apply(initial, &start)?;
    let pool = build_pool(problem.workers)?;
    pool.install(|| {
        let fluxes = dataset.flux_points();
        let seeds = vec![Vec::new(); fluxes.len()];
        let mut obj = Objective { problem, dataset, base, fluxes, seeds, evals: 0 };
        let u0 = problem.to_unit(&start);
        let f0 = obj.cost(&u0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
        let mut trace = vec![f0];
        let (mut best_u, mut best_f) = (u0, f0);
        let mut converged = false;
        let mut step = 0.1;
        for round in 0..=problem.restarts {
            let signs: Vec<f64> = if round == 0 {
                vec![1.0; best_u.len()]
            } else {
                (0..best_u.len()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
            };
            let run = nelder_mead(&mut obj, &best_u, best_f, step, &signs, problem, &mut trace)?;
            let improved = best_f - run.f > problem.tol * best_f.abs();
            (best_u, best_f) = (run.u, run.f);
            converged = run.converged;
            if !run.converged || (round > 0 && !improved) {
                break;
            }
            step *= 0.5;
        }
        let values = problem.to_physical(&best_u);
        let fitted_params = problem.apply(&base, &values)?;
        let sensitivity = sensitivity(&mut obj, &best_u, best_f)?;
        let r = residuals(&problem.model, dataset, &fitted_params, Loss::Squared)?;
        let rms = (r.residuals.iter().map(|x| x * x).sum::<f64>() / r.residuals.len() as f64).sqrt();
        Ok(FitReport {
            free: problem.groups.iter().map(ParameterGroup::label).collect(),
            initial: initial.to_map(),
            fitted: fitted_params.to_map(),
            fitted_params,
            initial_cost: f0,
            final_cost: best_f,
            evaluations: obj.evals,
            converged,
            trace,
            sensitivity,
            rms_residual_ghz: rms,
        })
    })
}

struct SimplexRun {
    u: Vec<f64>,
    f: f64,
    converged: bool,
}

fn clamp_unit(mut u: Vec<f64>) -> Vec<f64> {
    u.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    u
}

fn nelder_mead(
    obj: &mut Objective<'_>,
    u0: &[f64],
    f0: f64,
    step: f64,
    signs: &[f64],
    problem: &FitProblem,
    trace: &mut Vec<f64>,
) -> Result<SimplexRun> {
    let d = u0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(u0.to_vec(), f0)];
    for i in 0..d {
        let mut v = u0.to_vec();
        // Step inward when the vertex would leave the box.
        let s = step * signs[i];
        v[i] = if (0.0..=1.0).contains(&(v[i] + s)) { v[i] + s } else { v[i] - s };
        let v = clamp_unit(v);
        let f = obj.cost(&v)?;
        simplex.push((v, f));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best_so_far = trace.last().copied().unwrap_or(f64::INFINITY).min(simplex[0].1);
        trace.push(best_so_far);
        let spread = simplex[d].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= problem.tol * simplex[0].1.abs() + f64::MIN_POSITIVE && size <= problem.x_tol {
            return Ok(SimplexRun { u: simplex[0].0.clone(), f: simplex[0].1, converged: true });
        }
        if obj.evals >= problem.max_evals {
            return Ok(SimplexRun { u: simplex[0].0.clone(), f: simplex[0].1, converged: false });
        }
        let centroid: Vec<f64> = (0..d).map(|j| simplex[..d].iter().map(|(v, _)| v[j]).sum::<f64>() / d as f64).collect();
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            clamp_unit(centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect())
        };
        let xr = along(alpha);
        let fr = obj.cost(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = obj.cost(&xe)?;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(rho);
                let f = obj.cost(&x)?;
                (x, f)
            } else {
                let x = along(-rho);
                let f = obj.cost(&x)?;
                (x, f)
            };
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, x)| b + sigma * (x - b)).collect();
                    let f = obj.cost(&v)?;
                    *vertex = (v, f);
                }
            }
        }
    }
}

/// Central second differences of the cost per group, in physical units.
fn sensitivity(obj: &mut Objective<'_>, u: &[f64], f: f64) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    let h = 1e-3;
    for (i, g) in obj.problem.groups.iter().enumerate() {
        let width = g.hi - g.lo;
        if width == 0.0 {
            out.insert(g.label(), 0.0);
            continue;
        }
        let centre = u[i].clamp(h, 1.0 - h);
        let mut at = |x: f64| -> Result<f64> {
            let mut v = u.to_vec();
            v[i] = x;
            obj.cost(&v)
        };
        let fc = if centre == u[i] { f } else { at(centre)? };
        let curv = (at(centre + h)? - 2.0 * fc + at(centre - h)?) / (h * width).powi(2);
        out.insert(g.label(), curv);
    }
    Ok(out)
}

/// Model transitions at `truth` plus Gaussian noise of `noise_ghz`, one row
/// per (flux, label).
pub fn synthetic_dataset(
    model: &SpectroscopyModel,
    truth: &DeviceParams,
    fluxes: &[f64],
    labels: &[TransitionLabel],
    noise_ghz: f64,
    seed: u64,
) -> Result<TransitionDataset> {
    if labels.contains(&TransitionLabel::Unassigned) {
        return Err(Error::invalid("synthetic rows need explicit labels"));
    }
    let noise = Normal::new(0.0, noise_ghz).map_err(|e| Error::invalid(format!("noise level: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = model.transitions(truth, fluxes)?;
    let mut rows = Vec::with_capacity(t.len() * labels.len());
    for tr in &t {
        for &l in labels {
            rows.push(TransitionPoint {
                flux: tr.flux,
                freq: tr.get(l).expect("labelled") + noise.sample(&mut rng),
                label: l,
                weight: 1.0,
            });
        }
    }
    TransitionDataset::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_model() -> SpectroscopyModel {
        SpectroscopyModel { n_max: 2, qubit_levels: 4, ..SpectroscopyModel::default() }
    }

    fn data(truth: &DeviceParams) -> TransitionDataset {
        let fluxes: Vec<f64> = (0..6).map(|i| 0.05 + 0.08 * i as f64).collect();
        synthetic_dataset(
            &quick_model(),
            truth,
            &fluxes,
            &[TransitionLabel::T01, TransitionLabel::T02, TransitionLabel::Resonator],
            0.0,
            1,
        )
        .unwrap()
    }

    #[test]
    fn problem_validation() {
        let truth = DeviceParams::fitted_device();
        let mut p = FitProblem::junctions_and_resonator(&truth, 0.05).unwrap();
        p.validate().unwrap();
        p.groups.push(ParameterGroup::single("ej1", 1.0, 2.0));
        assert!(p.validate().is_err());
        p.groups.pop();
        p.groups[0].lo = 20.0;
        assert!(p.validate().is_err());
        assert!(FitProblem::default().validate().is_err());
    }

    #[test]
    fn truth_start_stays_at_truth() {
        let truth = DeviceParams::fitted_device();
        let d = data(&truth);
        let problem = FitProblem {
            model: quick_model(),
            max_evals: 200,
            ..FitProblem::junctions_and_resonator(&truth, 0.05).unwrap()
        };
        let r = fit(&problem, &d, &truth).unwrap();
        assert!(r.initial_cost < 1e-20);
        assert!(r.final_cost <= r.initial_cost);
        for name in ["ej1", "ej2", "ej3", "ej4", "f_res"] {
            assert_eq!(r.fitted[name], truth.get(name).unwrap());
        }
    }

    #[test]
    fn recovers_perturbed_parameters_with_ties() {
        let truth = DeviceParams::fitted_device();
        let d = data(&truth);
        let mut guess = truth;
        guess.set("ej4", 8.5).unwrap();
        for n in ["ec11", "ec22", "ec33"] {
            guess.set(n, 0.28).unwrap();
        }
        let problem = FitProblem {
            groups: vec![
                ParameterGroup::single("ej4", 7.5, 9.0),
                ParameterGroup::tied(&["ec11", "ec22", "ec33"], 0.25, 0.30),
            ],
            model: quick_model(),
            max_evals: 400,
            ..FitProblem::default()
        };
        let r = fit(&problem, &d, &guess).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.final_cost <= r.initial_cost);
        assert!((r.fitted["ej4"] - 8.20).abs() < 0.01, "{}", r.fitted["ej4"]);
        assert_eq!(r.fitted["ec11"], r.fitted["ec22"]);
        assert_eq!(r.fitted["ec22"], r.fitted["ec33"]);
        assert!((r.fitted["ec11"] - 0.2758).abs() < 1e-3);
        assert!(r.sensitivity["ej4"] > 0.0);
    }

    #[test]
    fn row_order_does_not_matter() {
        let truth = DeviceParams::fitted_device();
        let d = data(&truth);
        let mut rows = d.rows().to_vec();
        rows.reverse();
        rows.swap(0, 3);
        let shuffled = TransitionDataset::new(rows).unwrap();
        let mut guess = truth;
        guess.set("ej4", 8.4).unwrap();
        let problem = FitProblem {
            groups: vec![ParameterGroup::single("ej4", 7.5, 9.0)],
            model: quick_model(),
            max_evals: 60,
            ..FitProblem::default()
        };
        let a = fit(&problem, &d, &guess).unwrap();
        let b = fit(&problem, &shuffled, &guess).unwrap();
        assert_eq!(a.fitted, b.fitted);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn out_of_bounds_start_is_rejected() {
        let truth = DeviceParams::fitted_device();
        let problem = FitProblem {
            groups: vec![ParameterGroup::single("ej4", 9.0, 10.0)],
            model: quick_model(),
            ..FitProblem::default()
        };
        assert!(fit(&problem, &data(&truth), &truth).is_err());
    }

    #[test]
    fn evaluation_budget_is_reported_not_raised() {
        let truth = DeviceParams::fitted_device();
        let mut guess = truth;
        guess.set("ej4", 8.6).unwrap();
        let problem = FitProblem {
            groups: vec![ParameterGroup::single("ej4", 7.5, 9.0)],
            model: quick_model(),
            max_evals: 4,
            ..FitProblem::default()
        };
        let r = fit(&problem, &data(&truth), &guess).unwrap();
        assert!(!r.converged);
        assert!(r.final_cost <= r.initial_cost);
    }
}
