use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::wrap_phase;
use crate::circuit::ReducedCircuit;

/// Per-axis offsets of the 3×3×3 start lattice, chosen off every symmetric
/// line so no start sits on a stationary point.
const START_OFFSETS: [f64; 3] = [0.37, 0.41, 0.29];
const MERGE_TOLERANCE: f64 = 1e-4;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialMinimum {
    /// Mode phases on [−π, π).
    pub phi: [f64; 3],
    /// Potential energy in GHz.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaReport {
    /// Distinct local minima sorted by energy.
    pub minima: Vec<PotentialMinimum>,
    /// Starts whose descent did not reach a stationary point.
    pub unconverged: usize,
}

/// U(φ) = −Σ_{i≤3} E_J^(i) cos φ_i − E_J^(4) cos(Σφ − 2πΦ/Φ0).
pub fn potential(circuit: &ReducedCircuit, phi: [f64; 3]) -> f64 {
    let e = circuit.junctions.energies();
    let s = phi[0] + phi[1] + phi[2] - 2.0 * PI * circuit.phi_ext;
    -(0..3).map(|i| e[i] * phi[i].cos()).sum::<f64>() - e[3] * s.cos()
}

fn gradient(e: &[f64; 4], theta: f64, phi: &Vector3<f64>) -> Vector3<f64> {
    let s4 = e[3] * (phi.sum() - theta).sin();
    Vector3::from_fn(|i, _| e[i] * phi[i].sin() + s4)
}

fn hessian(e: &[f64; 4], theta: f64, phi: &Vector3<f64>) -> Matrix3<f64> {
    let c4 = e[3] * (phi.sum() - theta).cos();
    Matrix3::from_fn(|i, j| if i == j { e[i] * phi[i].cos() + c4 } else { c4 })
}

fn periodic_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| wrap_phase(a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// Local minima of the potential over the periodic cube, from a 3×3×3 lattice
/// of starts refined by damped Newton steps with a gradient-descent fallback.
pub fn classical_minima(circuit: &ReducedCircuit) -> MinimaReport {
    let e = circuit.junctions.energies();
    let theta = 2.0 * PI * circuit.phi_ext;
    let scale = e.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let u = |p: &Vector3<f64>| potential(circuit, [p[0], p[1], p[2]]);
    let mut found: Vec<PotentialMinimum> = Vec::new();
    let mut unconverged = 0;

    for k in 0..27 {
        let idx = [k / 9, (k / 3) % 3, k % 3];
        let mut p = Vector3::from_fn(|i, _| -PI + 2.0 * PI * (idx[i] as f64 + START_OFFSETS[i]) / 3.0);
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let g = gradient(&e, theta, &p);
            if g.norm() < 1e-13 * scale {
                converged = true;
                break;
            }
            let h = hessian(&e, theta, &p);
            let newton = h.cholesky().map(|c| -c.solve(&g));
            let dir = match newton {
                Some(d) if d.dot(&g) < 0.0 => d,
                _ => -g / scale,
            };
            // Backtracking on the potential.
            let u0 = u(&p);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let trial = p + dir * t;
                if u(&trial) <= u0 + 1e-4 * t * g.dot(&dir) {
                    p = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // Line search stalls on rounding of U near the bottom; finish
                // with undamped Newton steps on the gradient instead.
                for _ in 0..5 {
                    if let Some(c) = hessian(&e, theta, &p).cholesky() {
                        p -= c.solve(&gradient(&e, theta, &p));
                    }
                }
                break;
            }
        }
        converged = converged || gradient(&e, theta, &p).norm() < 1e-10 * scale;
        if !converged {
            unconverged += 1;
            continue;
        }
        let h = hessian(&e, theta, &p);
        if h.symmetric_eigenvalues().min() <= 1e-9 * scale {
            continue;
        }
        let phi = [wrap_phase(p[0]), wrap_phase(p[1]), wrap_phase(p[2])];
        if found.iter().all(|m| periodic_distance(m.phi, phi) > MERGE_TOLERANCE) {
            found.push(PotentialMinimum {
                phi,
                energy: potential(circuit, phi),
            });
        }
    }
    found.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.phi[0].total_cmp(&b.phi[0]))
            .then(a.phi[1].total_cmp(&b.phi[1]))
    });
    MinimaReport {
        minima: found,
        unconverged,
    }
}
