use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::ChargeBasis;

/// A three-mode state sampled on a uniform M³ grid over [−π, π)³.
///
/// ψ(φ) = (2π)^(−3/2) Σ_n c_n e^{i n·φ}, stored with φ1 as the slowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridWavefunction {
    m: usize,
    amplitudes: Vec<Complex64>,
}

impl PhaseGridWavefunction {
    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Grid coordinate of index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        grid_point(self.m, i)
    }

    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.m as f64).powi(3)
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.m + i[1]) * self.m + i[2]
    }

    pub fn at(&self, i: [usize; 3]) -> Complex64 {
        self.amplitudes[self.index(i)]
    }

    /// Σ|ψ|² dV.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    /// |ψ|² dV per grid point.
    pub fn probabilities(&self) -> Vec<f64> {
        let dv = self.cell_volume();
        self.amplitudes.iter().map(|a| a.norm_sqr() * dv).collect()
    }

    /// Iterate over (grid index triple, phases).
    pub fn points(&self) -> impl Iterator<Item = ([usize; 3], [f64; 3])> + '_ {
        let m = self.m;
        (0..m * m * m).map(move |k| {
            let i = [k / (m * m), (k / m) % m, k % m];
            (i, [grid_point(m, i[0]), grid_point(m, i[1]), grid_point(m, i[2])])
        })
    }

    /// ∫ conj(ψ_self)·f(φ)·ψ_other dV.
    pub fn sandwich<F: Fn([f64; 3]) -> f64>(&self, other: &Self, f: F) -> Result<Complex64> {
        if other.m != self.m {
            return Err(Error::invalid("phase grids differ in size"));
        }
        let sum: Complex64 = self
            .points()
            .zip(self.amplitudes.iter().zip(&other.amplitudes))
            .map(|((_, phi), (a, b))| a.conj() * b * f(phi))
            .sum();
        Ok(sum * self.cell_volume())
    }

    /// Probability within the region where `pred(φ)` holds.
    pub fn weight_where<F: Fn([f64; 3]) -> bool>(&self, pred: F) -> f64 {
        let dv = self.cell_volume();
        self.points()
            .zip(&self.amplitudes)
            .filter(|((_, phi), _)| pred(*phi))
            .map(|(_, a)| a.norm_sqr() * dv)
            .sum()
    }

    /// `phi1,phi2,phi3,re,im` rows over the whole grid.
    pub fn write_text<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "phi1,phi2,phi3,re,im")?;
        for ((_, phi), a) in self.points().zip(&self.amplitudes) {
            writeln!(out, "{:.8},{:.8},{:.8},{:.12e},{:.12e}", phi[0], phi[1], phi[2], a.re, a.im)?;
        }
        Ok(())
    }

    /// Plane through the grid point nearest to `value` on `axis` (0-based);
    /// rows `u,v,re,im,prob_density` over the two remaining axes in order.
    pub fn write_slice<W: Write>(&self, out: &mut W, axis: usize, value: f64) -> Result<()> {
        if axis >= 3 {
            return Err(Error::ModeOutOfRange { mode: axis + 1, modes: 3 });
        }
        let fixed = nearest_index(self.m, value);
        writeln!(out, "u,v,re,im,prob_density")?;
        for u in 0..self.m {
            for v in 0..self.m {
                let idx = match axis {
                    0 => [fixed, u, v],
                    1 => [u, fixed, v],
                    _ => [u, v, fixed],
                };
                let a = self.at(idx);
                writeln!(
                    out,
                    "{:.8},{:.8},{:.12e},{:.12e},{:.12e}",
                    self.coordinate(u),
                    self.coordinate(v),
                    a.re,
                    a.im,
                    a.norm_sqr()
                )?;
            }
        }
        Ok(())
    }
}

fn grid_point(m: usize, i: usize) -> f64 {
    -PI + 2.0 * PI * i as f64 / m as f64
}

fn nearest_index(m: usize, value: f64) -> usize {
    let wrapped = wrap_phase(value);
    let x = (wrapped + PI) * m as f64 / (2.0 * PI);
    (x.round() as usize) % m
}

/// Map an angle onto the principal interval [−π, π).
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Sample a charge-basis state on an M³ phase grid. M must resolve every
/// charge difference, i.e. M ≥ 2·n_max + 1, or the grid norm is wrong.
pub fn to_phase_grid(state: &[Complex64], basis: &ChargeBasis, m: usize) -> Result<PhaseGridWavefunction> {
    if basis.modes() != 3 {
        return Err(Error::invalid("phase grids are three-dimensional"));
    }
    if state.len() != basis.dim() {
        return Err(Error::invalid("state length does not match basis"));
    }
    let required = 2 * basis.n_max() + 1;
    if m < required {
        return Err(Error::Aliasing {
            grid: m,
            n_max: basis.n_max(),
            required,
        });
    }
    let w = basis.width();
    let n_max = basis.n_max() as f64;
    // table[j][q] = e^{i n_q φ_j}
    let table: Vec<Vec<Complex64>> = (0..m)
        .map(|j| {
            let phi = grid_point(m, j);
            (0..w).map(|q| Complex64::from_polar(1.0, (q as f64 - n_max) * phi)).collect()
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);

    // Mode 3: a[q1][q2][j3]
    let mut a = vec![zero; w * w * m];
    for q12 in 0..w * w {
        let row = &state[q12 * w..(q12 + 1) * w];
        for j3 in 0..m {
            a[q12 * m + j3] = row.iter().zip(&table[j3]).map(|(c, e)| c * e).sum();
        }
    }
    // Mode 2: b[q1][j2][j3]
    let mut b = vec![zero; w * m * m];
    for q1 in 0..w {
        for j2 in 0..m {
            let e2 = &table[j2];
            let dst = &mut b[(q1 * m + j2) * m..(q1 * m + j2 + 1) * m];
            for (q2, &e) in e2.iter().enumerate() {
                let src = &a[(q1 * w + q2) * m..(q1 * w + q2 + 1) * m];
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += s * e);
            }
        }
    }
    // Mode 1
    let norm = (2.0 * PI).powf(-1.5);
    let mut psi = vec![zero; m * m * m];
    for j1 in 0..m {
        let dst = &mut psi[j1 * m * m..(j1 + 1) * m * m];
        for (q1, &e) in table[j1].iter().enumerate() {
            let src = &b[q1 * m * m..(q1 + 1) * m * m];
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s * e);
        }
        dst.iter_mut().for_each(|d| *d *= norm);
    }
    Ok(PhaseGridWavefunction { m, amplitudes: psi })
}

/// ∫ min(|ψ_a|², |ψ_b|²) dV: 0 for disjoint supports, 1 for identical densities.
pub fn support_overlap(a: &PhaseGridWavefunction, b: &PhaseGridWavefunction) -> Result<f64> {
    if a.m != b.m {
        return Err(Error::invalid("phase grids differ in size"));
    }
    let dv = a.cell_volume();
    Ok(a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.norm_sqr().min(y.norm_sqr()) * dv)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_state(basis: &ChargeBasis, seed: &[f64]) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..basis.dim())
            .map(|i| Complex64::new(seed[i % seed.len()] * ((i * 7 % 11) as f64 - 5.0), seed[(i + 3) % seed.len()]))
            .collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
        v
    }

    #[test]
    fn single_charge_state_is_flat() {
        let basis = ChargeBasis::rhombus(2).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
        v[basis.index_of([0, 0, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        let g = to_phase_grid(&v, &basis, 6).unwrap();
        let expect = (2.0 * PI).powf(-1.5);
        assert!(g.amplitudes().iter().all(|a| (a.re - expect).abs() < 1e-14 && a.im.abs() < 1e-14));
    }

    #[test]
    fn plane_wave_matches_direct_evaluation() {
        let basis = ChargeBasis::rhombus(2).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
        v[basis.index_of([1, -2, 0]).unwrap()] = Complex64::new(0.0, 1.0);
        let g = to_phase_grid(&v, &basis, 7).unwrap();
        for (i, phi) in g.points() {
            let direct = Complex64::new(0.0, 1.0) * Complex64::from_polar((2.0 * PI).powf(-1.5), phi[0] - 2.0 * phi[1]);
            assert!((g.at(i) - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn small_grid_is_rejected() {
        let basis = ChargeBasis::rhombus(3).unwrap();
        let v = vec![Complex64::new(0.0, 0.0); basis.dim()];
        assert!(matches!(to_phase_grid(&v, &basis, 6), Err(Error::Aliasing { required: 7, .. })));
    }

    #[test]
    fn wrap_is_principal() {
        assert_eq!(wrap_phase(PI), -PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(-0.3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn slice_has_m_squared_rows() {
        let basis = ChargeBasis::rhombus(1).unwrap();
        let g = to_phase_grid(&random_state(&basis, &[0.3, 0.5, -0.2]), &basis, 4).unwrap();
        let mut buf = Vec::new();
        g.write_slice(&mut buf, 2, 0.0).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 16);
    }

    proptest! {
        #[test]
        fn parseval(seed in proptest::collection::vec(-1.0f64..1.0, 5), extra in 0usize..4) {
            prop_assume!(seed.iter().any(|x| x.abs() > 1e-3));
            let basis = ChargeBasis::rhombus(2).unwrap();
            let v = random_state(&basis, &seed);
            let g = to_phase_grid(&v, &basis, 5 + extra).unwrap();
            prop_assert!((g.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
