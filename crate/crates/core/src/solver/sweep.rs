use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eigensolve, EigenResult, SolverSettings};
use crate::circuit::{JunctionSet, ReducedCircuit};
use crate::error::{Error, Result};
use crate::hilbert::{assemble_rhombus, ChargeBasis, Gauge, DEFAULT_N_MAX};

/// Truncation escalation and sweep bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    /// Starting charge truncation.
    pub n_max: usize,
    /// Largest truncation tried before giving up.
    pub max_n_max: usize,
    /// Accept a truncation once raising n_max by 2 moves every tracked
    /// level by less than this (GHz).
    pub tol_conv: f64,
    /// Number of levels tracked.
    pub k: usize,
    pub keep_vectors: bool,
    pub gauge: Gauge,
    /// Worker threads; 0 uses every logical core.
    pub workers: usize,
    pub solver: SolverSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            max_n_max: 14,
            tol_conv: 1e-6,
            k: 4,
            keep_vectors: false,
            gauge: Gauge::SingleJunction,
            workers: 0,
            solver: SolverSettings::default(),
        }
    }
}

impl SweepSettings {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        build_pool(self.workers)
    }
}

/// A rayon pool of `workers` threads; 0 means one per logical core.
pub fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))
}

/// Eigenpairs at the accepted truncation.
#[derive(Debug, Clone)]
pub struct ConvergedSolve {
    pub basis: ChargeBasis,
    pub eigen: EigenResult,
    /// Largest level shift between the accepted truncation and the one below.
    pub shift: f64,
}

/// Solve the rhombus at increasing n_max (in steps of 2) until the tracked
/// levels stop moving; returns the larger of the last two truncations.
pub fn solve_converged(circuit: &ReducedCircuit, settings: &SweepSettings) -> Result<ConvergedSolve> {
    let solve = |n: usize| -> Result<(ChargeBasis, EigenResult)> {
        let basis = ChargeBasis::rhombus(n)?;
        let h = assemble_rhombus(circuit, &basis, settings.gauge)?;
        Ok((basis, eigensolve(&h, settings.k, &settings.solver)?))
    };
    let mut n = settings.n_max;
    let mut prev = solve(n)?;
    let mut shift = f64::INFINITY;
    while n + 2 <= settings.max_n_max {
        n += 2;
        let next = solve(n)?;
        shift = prev
            .1
            .energies
            .iter()
            .zip(&next.1.energies)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if shift < settings.tol_conv {
            return Ok(ConvergedSolve {
                basis: next.0,
                eigen: next.1,
                shift,
            });
        }
        prev = next;
    }
    Err(Error::Truncation { n_max: n, shift })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SweepParameter {
    /// External flux in Φ0.
    Flux,
    /// Offset charge of one mode (0-based).
    Charge { mode: usize },
    /// Junction asymmetry at fixed flux.
    Alpha { phi_ext: f64 },
}

impl SweepParameter {
    pub fn name(&self) -> String {
        match self {
            SweepParameter::Flux => "flux_phi0".into(),
            SweepParameter::Charge { mode } => format!("n_g{}", mode + 1),
            SweepParameter::Alpha { .. } => "alpha".into(),
        }
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub param: f64,
    pub n_max: usize,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Tracked branch label of each sorted level.
    pub branch: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<Complex64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub circuit: ReducedCircuit,
    pub gauge: Gauge,
    pub k: usize,
    pub tol_conv: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub points: Vec<SpectrumPoint>,
    pub metadata: SweepMetadata,
}

impl SpectrumResult {
    /// Energy of sorted level `level` at every grid point.
    pub fn level(&self, level: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.energies[level]).collect()
    }

    /// E_b − E_a at every grid point.
    pub fn transition(&self, a: usize, b: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.energies[b] - p.energies[a]).collect()
    }

    /// Energies of a tracked branch (label assigned at the first grid point).
    pub fn branch(&self, label: usize) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| {
                let idx = p.branch.iter().position(|&b| b == label).expect("every label present");
                p.energies[idx]
            })
            .collect()
    }

    /// `param,level,energy_ghz` rows preceded by `# key: value` metadata lines.
    pub fn write_csv<W: Write>(&self, out: &mut W, header: &[(String, String)]) -> Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "param,level,energy_ghz")?;
        for p in &self.points {
            for (level, e) in p.energies.iter().enumerate() {
                writeln!(out, "{:.10},{level},{:.12}", p.param, e)?;
            }
        }
        Ok(())
    }

    /// JSON document; eigenvectors are written as `[re, im]` pairs over the
    /// charge basis with charges offset by −n_max.
    pub fn to_json(&self, include_vectors: bool, meta: serde_json::Value) -> serde_json::Value {
        let points: Vec<serde_json::Value> = self
            .points
            .iter()
            .map(|p| {
                let mut v = serde_json::json!({
                    "param": p.param,
                    "n_max": p.n_max,
                    "charge_offset": -(p.n_max as i64),
                    "energies_ghz": p.energies,
                    "residuals": p.residuals,
                    "branch": p.branch,
                });
                if include_vectors {
                    if let Some(vecs) = &p.vectors {
                        let pairs: Vec<Vec<[f64; 2]>> = vecs
                            .iter()
                            .map(|vec| vec.iter().map(|a| [a.re, a.im]).collect())
                            .collect();
                        v["vectors"] = serde_json::json!(pairs);
                    }
                }
                v
            })
            .collect();
        serde_json::json!({
            "meta": meta,
            "parameter": self.parameter,
            "metadata": self.metadata,
            "points": points,
        })
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid("sweep grid has non-finite values"));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::invalid("sweep grid must be strictly monotone"));
    }
    Ok(())
}

/// Label levels at each point by maximal overlap with the previous point.
fn track(points: &mut [(ChargeBasis, EigenResult)]) -> Vec<Vec<usize>> {
    let mut labels: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    for p in 0..points.len() {
        if p == 0 {
            labels.push((0..points[0].1.len()).collect());
            continue;
        }
        let (b_prev, prev) = &points[p - 1];
        let (b_cur, cur) = &points[p];
        let common = if b_prev.n_max() >= b_cur.n_max() { *b_prev } else { *b_cur };
        let lift = |b: &ChargeBasis, v: &Vec<Complex64>| b.embed(v, &common).expect("same mode count");
        let pv: Vec<_> = prev.vectors.iter().map(|v| lift(b_prev, v)).collect();
        let cv: Vec<_> = cur.vectors.iter().map(|v| lift(b_cur, v)).collect();
        let k = cv.len();
        let mut overlaps = Vec::with_capacity(k * k);
        for (i, a) in pv.iter().enumerate() {
            for (j, b) in cv.iter().enumerate() {
                let o: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                overlaps.push((o.norm_sqr(), i, j));
            }
        }
        // Greedy maximum-overlap matching; ties resolved by index order.
        overlaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut label = vec![usize::MAX; k];
        let mut used_prev = vec![false; k];
        for (_, i, j) in overlaps {
            if !used_prev[i] && label[j] == usize::MAX {
                used_prev[i] = true;
                label[j] = labels[p - 1][i];
            }
        }
        labels.push(label);
    }
    labels
}

fn run_sweep<F>(
    parameter: SweepParameter,
    base: &ReducedCircuit,
    grid: &[f64],
    settings: &SweepSettings,
    make: F,
) -> Result<SpectrumResult>
where
    F: Fn(f64) -> Result<ReducedCircuit> + Sync,
{
    check_grid(grid)?;
    let pool = settings.pool()?;
    let solved: Vec<Result<ConvergedSolve>> = pool.install(|| {
        grid.par_iter()
            .map(|&x| make(x).and_then(|c| solve_converged(&c, settings)))
            .collect()
    });
    let mut points = Vec::with_capacity(grid.len());
    for (index, r) in solved.into_iter().enumerate() {
        let s = r.map_err(|e| Error::Sweep {
            index,
            source: Box::new(e),
        })?;
        points.push((s.basis, s.eigen));
    }
    let labels = track(&mut points);
    let points = points
        .into_iter()
        .zip(labels)
        .zip(grid)
        .map(|(((basis, eig), branch), &param)| SpectrumPoint {
            param,
            n_max: basis.n_max(),
            energies: eig.energies,
            residuals: eig.residuals,
            branch,
            vectors: settings.keep_vectors.then_some(eig.vectors),
        })
        .collect();
    Ok(SpectrumResult {
        parameter,
        grid: grid.to_vec(),
        points,
        metadata: SweepMetadata {
            circuit: *base,
            gauge: settings.gauge,
            k: settings.k,
            tol_conv: settings.tol_conv,
        },
    })
}

/// Spectrum versus external flux (Φ0 units).
pub fn flux_sweep(circuit: &ReducedCircuit, flux_grid: &[f64], settings: &SweepSettings) -> Result<SpectrumResult> {
    run_sweep(SweepParameter::Flux, circuit, flux_grid, settings, |phi| Ok(circuit.with_flux(phi)))
}

/// Spectrum versus the offset charge of `mode` (0-based), other offsets fixed.
pub fn charge_sweep(
    circuit: &ReducedCircuit,
    mode: usize,
    n_g_grid: &[f64],
    settings: &SweepSettings,
) -> Result<SpectrumResult> {
    if mode >= 3 {
        return Err(Error::ModeOutOfRange { mode: mode + 1, modes: 3 });
    }
    run_sweep(SweepParameter::Charge { mode }, circuit, n_g_grid, settings, |ng| {
        Ok(circuit.with_offset(mode, ng))
    })
}

/// Spectrum versus asymmetry α at fixed flux: E_J^(4) = α·mean(E_J^(1..3)).
pub fn alpha_sweep(
    template: &ReducedCircuit,
    alpha_grid: &[f64],
    phi_ext: f64,
    settings: &SweepSettings,
) -> Result<SpectrumResult> {
    if let Some(a) = alpha_grid.iter().find(|a| !(**a > 0.0 && **a <= 1.2)) {
        return Err(Error::invalid(format!("alpha {a} outside (0, 1.2]")));
    }
    let e = template.junctions.energies();
    let base = [e[0], e[1], e[2]];
    run_sweep(
        SweepParameter::Alpha { phi_ext },
        &template.with_flux(phi_ext),
        alpha_grid,
        settings,
        |alpha| Ok(template.with_flux(phi_ext).with_junctions(JunctionSet::with_alpha(base, alpha)?)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SweepSettings {
        SweepSettings {
            n_max: 3,
            max_n_max: 9,
            tol_conv: 1e-6,
            k: 3,
            workers: 1,
            ..Default::default()
        }
    }

    fn charge_regime(phi: f64) -> ReducedCircuit {
        let ec = [[2.0, 0.4, 0.1], [0.4, 2.0, 0.4], [0.1, 0.4, 2.0]];
        ReducedCircuit::new(ec, JunctionSet::new([1.0, 1.1, 0.9, 0.7]).unwrap(), [0.0; 3], phi).unwrap()
    }

    #[test]
    fn grid_validation() {
        let c = charge_regime(0.0);
        assert!(flux_sweep(&c, &[], &quick()).is_err());
        assert!(flux_sweep(&c, &[0.1, 0.1], &quick()).is_err());
        assert!(alpha_sweep(&c, &[0.0, 0.5], 0.5, &quick()).is_err());
        assert!(charge_sweep(&c, 3, &[0.0], &quick()).is_err());
    }

    #[test]
    fn flux_periodicity_and_mirror_on_shared_points() {
        let c = charge_regime(0.0);
        let r = flux_sweep(&c, &[-0.3, 0.2, 0.3, 0.7, 0.8, 1.2], &quick()).unwrap();
        for lvl in 0..3 {
            let e = r.level(lvl);
            let close = |a: f64, b: f64| (a - b).abs() < 1e-9 * a.abs().max(1.0);
            assert!(close(e[0], e[3]) && close(e[1], e[5]));
            // Mirror about Φ0/2 at n_g = 0.
            assert!(close(e[1], e[4]) && close(e[2], e[3]));
        }
    }

    #[test]
    fn sweep_is_independent_of_worker_count() {
        let c = charge_regime(0.0);
        let grid = [0.0, 0.25, 0.5];
        let one = flux_sweep(&c, &grid, &quick()).unwrap();
        let two = flux_sweep(&c, &grid, &SweepSettings { workers: 2, ..quick() }).unwrap();
        for (a, b) in one.points.iter().zip(&two.points) {
            assert_eq!(a.energies, b.energies);
            assert_eq!(a.branch, b.branch);
        }
    }

    #[test]
    fn tracking_follows_a_level_crossing() {
        // Two uncoupled diagonal states crossing as the offset charge moves.
        let mut c = charge_regime(0.0);
        c.ec = [[1.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 5.0]];
        c.junctions = JunctionSet::with_alpha_unchecked([0.0; 3], 0.0);
        let grid: Vec<f64> = (0..7).map(|i| 0.2 + 0.1 * i as f64).collect();
        let r = charge_sweep(&c, 0, &grid, &SweepSettings { k: 2, ..quick() }).unwrap();
        // Branch 0 is |n1 = 0⟩ with energy 4·(n_g)², rising through the crossing at 0.5.
        let b0 = r.branch(0);
        for (x, e) in grid.iter().zip(&b0) {
            assert!((e - 4.0 * x * x).abs() < 1e-9, "{x}: {e}");
        }
    }

    #[test]
    fn csv_layout() {
        let c = charge_regime(0.0);
        let r = flux_sweep(&c, &[0.0, 0.5], &quick()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, &[("gauge".into(), "single-junction".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# gauge: single-junction");
        assert_eq!(lines[1], "param,level,energy_ghz");
        assert_eq!(lines.len(), 2 + 2 * 3);
    }
}
