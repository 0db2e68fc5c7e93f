//! Restarted Lanczos with full reorthogonalization.
//!
//! The projected matrix is formed explicitly as Vᴴ(HV), so any orthonormal
//! basis gives a valid Rayleigh–Ritz step. After each cycle the lowest
//! `k + buffer` Ritz vectors are kept and the basis is extended, block-wise,
//! from the residuals of the unconverged wanted pairs. Once the wanted pairs
//! look converged a random vector is injected and one more cycle is run,
//! which picks up partners of degenerate eigenvalues that a single Krylov
//! sequence cannot see.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fix_phase, EigenResult, SolverSettings};
use crate::error::{Error, Result};
use crate::hilbert::SparseMatrix;

type Vector = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Gershgorin bounds on the spectrum.
pub(crate) fn spectral_bounds(h: &SparseMatrix) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut radius = vec![0.0; h.dim()];
    let mut diag = vec![0.0; h.dim()];
    for (r, c, v) in h.triplets() {
        if r == c {
            diag[r] = v.re;
        } else {
            radius[r] += v.norm();
        }
    }
    for (d, r) in diag.iter().zip(&radius) {
        lo = lo.min(d - r);
        hi = hi.max(d + r);
    }
    (lo, hi)
}

/// Orthogonalize `r` against `basis` twice; returns the first-pass coefficients.
fn orthogonalize(basis: &[Vector], r: &mut [Complex64]) -> Vec<Complex64> {
    let coeffs: Vec<Complex64> = basis.iter().map(|v| dot(v, r)).collect();
    for (v, &c) in basis.iter().zip(&coeffs) {
        axpy(-c, v, r);
    }
    for v in basis {
        let c = dot(v, r);
        axpy(-c, v, r);
    }
    coeffs
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

struct Krylov<'a> {
    h: &'a SparseMatrix,
    v: Vec<Vector>,
    w: Vec<Vector>,
    t: Vec<Vec<Complex64>>,
    matvecs: usize,
}

impl<'a> Krylov<'a> {
    /// Append a normalized vector orthogonal to the basis and apply H to it.
    fn push(&mut self, vec: Vector) {
        let mut w = vec![ZERO; self.h.dim()];
        self.h.mul_vec_into(&vec, &mut w);
        self.matvecs += 1;
        let col: Vec<Complex64> = self.v.iter().map(|vi| dot(vi, &w)).collect();
        let diag = dot(&vec, &w).re;
        for (i, c) in col.iter().enumerate() {
            self.t[i].push(*c);
        }
        let mut row: Vec<Complex64> = col.iter().map(|c| c.conj()).collect();
        row.push(Complex64::new(diag, 0.0));
        self.t.push(row);
        self.v.push(vec);
        self.w.push(w);
    }

    /// H applied to basis vector `idx`, orthogonalized against the basis.
    fn direction_from(&self, idx: usize) -> Vector {
        let mut r = self.w[idx].clone();
        orthogonalize(&self.v, &mut r);
        r
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let m = self.v.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i <= j {
                self.t[i][j]
            } else {
                self.t[j][i].conj()
            }
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    fn combine(basis: &[Vector], coeffs: &DMatrix<Complex64>, col: usize) -> Vector {
        let mut out = vec![ZERO; basis[0].len()];
        for (i, b) in basis.iter().enumerate() {
            axpy(coeffs[(i, col)], b, &mut out);
        }
        out
    }

    /// Ritz vectors, H·(Ritz vectors) and residual norms of the first `count` pairs.
    fn ritz_pairs(&self, s: &DMatrix<Complex64>, values: &[f64], count: usize) -> (Vec<Vector>, Vec<Vector>, Vec<f64>) {
        let mut ys = Vec::with_capacity(count);
        let mut hys = Vec::with_capacity(count);
        let mut res = Vec::with_capacity(count);
        for c in 0..count {
            let y = Self::combine(&self.v, s, c);
            let hy = Self::combine(&self.w, s, c);
            let r: f64 = hy
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - values[c] * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            ys.push(y);
            hys.push(hy);
            res.push(r);
        }
        (ys, hys, res)
    }

    fn restart(&mut self, values: &[f64], ys: Vec<Vector>, hys: Vec<Vector>) {
        let keep = ys.len();
        self.v = ys;
        self.w = hys;
        self.t = (0..keep)
            .map(|i| {
                let mut row = vec![ZERO; keep];
                row[i] = Complex64::new(values[i], 0.0);
                row
            })
            .collect();
    }
}

pub(crate) fn lanczos(h: &SparseMatrix, k: usize, settings: &SolverSettings, guess: &[Vector]) -> Result<EigenResult> {
    let dim = h.dim();
    let (lo, hi) = spectral_bounds(h);
    let scale = (hi - lo).max(f64::MIN_POSITIVE);
    let tol = settings.tol * scale;
    let keep = (k + settings.krylov_buffer).min(dim - 1).max(k);
    let max_basis = (2 * keep + 10).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let mut kr = Krylov {
        h,
        v: Vec::new(),
        w: Vec::new(),
        t: Vec::new(),
        matvecs: 0,
    };
    for g in guess.iter().filter(|g| g.len() == dim).take(keep) {
        let mut r = g.clone();
        orthogonalize(&kr.v, &mut r);
        let n = norm(&r);
        if n > 1e-8 {
            r.iter_mut().for_each(|x| *x /= n);
            kr.push(r);
        }
    }
    if kr.v.is_empty() {
        let mut start = random_vector(&mut rng, dim);
        let n0 = norm(&start);
        start.iter_mut().for_each(|x| *x /= n0);
        kr.push(start);
    }

    let mut confirmed: Option<Vec<f64>> = None;
    let mut worst;
    // Block width: the newest `block` vectors are the current Krylov frontier.
    let mut block = kr.v.len();
    loop {
        while kr.v.len() < max_basis {
            let mut r = kr.direction_from(kr.v.len() - block);
            let mut beta = norm(&r);
            if beta <= 1e-12 * scale.max(1.0) {
                // Invariant subspace: continue from a fresh random direction.
                r = random_vector(&mut rng, dim);
                orthogonalize(&kr.v, &mut r);
                beta = norm(&r);
                if beta <= 1e-12 {
                    break;
                }
            }
            r.iter_mut().for_each(|x| *x /= beta);
            kr.push(r);
        }

        let (values, s) = kr.ritz();
        let count = keep.min(values.len());
        let (ys, hys, res) = kr.ritz_pairs(&s, &values, count);
        worst = res[..k].iter().cloned().fold(0.0, f64::max);
        let converged = worst <= tol;
        let exhausted = kr.v.len() == dim;

        if converged || exhausted {
            let current = values[..k].to_vec();
            let settled = exhausted
                || confirmed
                    .as_ref()
                    .is_some_and(|prev| prev.iter().zip(&current).all(|(a, b)| (a - b).abs() <= tol));
            if settled {
                let vectors = ys.into_iter().take(k).map(fix_phase).collect();
                return Ok(EigenResult {
                    energies: current,
                    vectors,
                    residuals: res[..k].to_vec(),
                });
            }
            confirmed = Some(current);
        } else {
            confirmed = None;
        }

        if kr.matvecs >= settings.max_matvecs {
            return Err(Error::NonConvergence {
                iterations: kr.matvecs,
                residual: worst / scale,
            });
        }

        // Continue from the residuals of the unconverged wanted pairs; after
        // an apparent convergence, from a random vector instead.
        let mut dirs: Vec<Vector> = (0..k)
            .filter(|&i| res[i] > tol)
            .map(|i| hys[i].iter().zip(&ys[i]).map(|(a, b)| a - values[i] * b).collect())
            .collect();
        if confirmed.is_some() || dirs.is_empty() {
            dirs.push(random_vector(&mut rng, dim));
        }
        kr.restart(&values, ys, hys);
        block = 0;
        for mut r in dirs {
            orthogonalize(&kr.v, &mut r);
            let beta = norm(&r);
            if beta > 1e-12 * scale.max(1.0) && kr.v.len() < dim {
                r.iter_mut().for_each(|x| *x /= beta);
                kr.push(r);
                block += 1;
            }
        }
        if block == 0 {
            let mut r = random_vector(&mut rng, dim);
            orthogonalize(&kr.v, &mut r);
            let beta = norm(&r);
            r.iter_mut().for_each(|x| *x /= beta);
            kr.push(r);
            block = 1;
        }
    }
}
