use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Compressed-row complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self {
            dim,
            row_ptr,
            cols,
            vals,
        };
        m.prune();
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, Complex64::new(d, 0.0)))
            .collect();
        Self::from_triplets(diag.len(), triplets)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    fn prune(&mut self) {
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != Complex64::new(0.0, 0.0) {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// y = A·x
    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// ⟨a|A|b⟩
    pub fn expectation(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let ab = self.mul_vec(b);
        a.iter().zip(&ab).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                for q in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    triplets.push((r, other.cols[q], self.vals[k] * other.vals[q]));
                }
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        let triplets = self
            .triplets()
            .flat_map(|(r, c, v)| other.triplets().map(move |(p, q, w)| (r * d + p, c * d + q, v * w)))
            .collect();
        Self::from_triplets(self.dim * d, triplets)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |A − A†|
    pub fn hermitian_deviation(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Coordinate list, one `row col re im` entry per line.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 48);
        for (r, c, v) in self.triplets() {
            let _ = writeln!(out, "{r} {c} {:.17e} {:.17e}", v.re, v.im);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, c(1.0, 0.0)), (0, 1, c(0.5, 1.0)), (1, 1, c(0.0, 0.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(1.5, 1.0));
    }

    #[test]
    fn matmul_and_kron_match_dense() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 0, c(1.0, 0.0)), (0, 1, c(0.0, 2.0)), (1, 0, c(3.0, 0.0))]);
        let b = SparseMatrix::from_triplets(2, vec![(1, 1, c(2.0, -1.0)), (0, 1, c(1.0, 0.0))]);
        let prod = a.matmul(&b).to_dense();
        assert!((prod - a.to_dense() * b.to_dense()).norm() < 1e-14);
        let k = a.kron(&b).to_dense();
        assert!((k - a.to_dense().kronecker(&b.to_dense())).norm() < 1e-14);
    }

    #[test]
    fn coordinate_text_lists_entries() {
        let m = SparseMatrix::from_triplets(3, vec![(2, 0, c(1.0, -2.0))]);
        let text = m.to_coordinate_text();
        let fields: Vec<&str> = text.split_whitespace().collect();
        assert_eq!(fields[0], "2");
        assert_eq!(fields[1], "0");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 1.0);
        assert_eq!(fields[3].parse::<f64>().unwrap(), -2.0);
    }
}
