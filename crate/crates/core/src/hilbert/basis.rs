use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SparseMatrix;
use crate::error::{Error, Result};

/// Truncated charge basis: each mode holds charges −n_max..=n_max.
///
/// States are ordered mode-1-major: the index of (n_1, …, n_M) is
/// Σ_i (n_i + n_max)·(2n_max+1)^(M−1−i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChargeBasis {
    n_max: usize,
    modes: usize,
}

impl ChargeBasis {
    pub fn new(n_max: usize, modes: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("charge truncation n_max must be at least 1"));
        }
        if !(1..=3).contains(&modes) {
            return Err(Error::invalid(format!("unsupported mode count {modes}")));
        }
        Ok(Self { n_max, modes })
    }

    /// Three-mode basis used for the rhombus.
    pub fn rhombus(n_max: usize) -> Result<Self> {
        Self::new(n_max, 3)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of charge states per mode.
    pub fn width(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.width().pow(self.modes as u32)
    }

    fn stride(&self, mode: usize) -> usize {
        self.width().pow((self.modes - 1 - mode) as u32)
    }

    /// Charges of basis state `index` (unused trailing modes are 0).
    pub fn charges(&self, index: usize) -> [i32; 3] {
        let w = self.width();
        let mut out = [0i32; 3];
        let mut rest = index;
        for mode in (0..self.modes).rev() {
            out[mode] = (rest % w) as i32 - self.n_max as i32;
            rest /= w;
        }
        out
    }

    pub fn index_of(&self, charges: [i32; 3]) -> Option<usize> {
        let n = self.n_max as i32;
        let mut idx = 0usize;
        for (mode, &q) in charges.iter().enumerate().take(self.modes) {
            if q.abs() > n {
                return None;
            }
            idx += (q + n) as usize * self.stride(mode);
        }
        Some(idx)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(Error::ModeOutOfRange {
                mode: mode + 1,
                modes: self.modes,
            });
        }
        Ok(())
    }

    /// Copy a state vector into a larger (or equal) basis with the same mode
    /// count, zero-filling the extra charge states.
    pub fn embed(&self, state: &[Complex64], target: &ChargeBasis) -> Result<Vec<Complex64>> {
        if target.modes != self.modes || target.n_max < self.n_max {
            return Err(Error::invalid("embedding requires a larger basis with equal mode count"));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); target.dim()];
        for (i, &a) in state.iter().enumerate() {
            let idx = target.index_of(self.charges(i)).expect("charge fits in larger basis");
            out[idx] = a;
        }
        Ok(out)
    }
}

/// n̂ on factor `mode` (0-based), identity elsewhere.
pub fn charge_operator(mode: usize, basis: &ChargeBasis) -> Result<SparseMatrix> {
    basis.check_mode(mode)?;
    let diag: Vec<f64> = (0..basis.dim()).map(|i| basis.charges(i)[mode] as f64).collect();
    Ok(SparseMatrix::from_diagonal(&diag))
}

/// Matrix of e^{−iφ̂} on factor `mode`: lowers that charge by one and
/// annihilates the bottom edge state.
pub fn shift_operator(mode: usize, basis: &ChargeBasis) -> Result<SparseMatrix> {
    basis.check_mode(mode)?;
    let one = Complex64::new(1.0, 0.0);
    let triplets = (0..basis.dim())
        .filter_map(|i| {
            let mut q = basis.charges(i);
            q[mode] -= 1;
            basis.index_of(q).map(|j| (j, i, one))
        })
        .collect();
    Ok(SparseMatrix::from_triplets(basis.dim(), triplets))
}
