use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::ChargeBasis;

/// Which of the two computational states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Ground,
    Excited,
}

/// Unnormalized charge amplitude of the two-delta approximation:
/// cos(Σn·π/4) for the ground state, sin(Σn·π/4) for the excited state.
pub fn delta_wavefunction(n: [i32; 3], parity: Parity) -> f64 {
    let x = (n[0] + n[1] + n[2]) as f64 * PI / 4.0;
    match parity {
        Parity::Ground => x.cos(),
        Parity::Excited => x.sin(),
    }
}

/// Single-Cooper-pair transmission |t1 + t2·e^{2πiΦ}|² / (t1 + t2)² through
/// a two-path interferometer.
pub fn interferometer_transmission(t1: f64, t2: f64, phi_ext: f64) -> Result<f64> {
    if !(t1 >= 0.0 && t2 >= 0.0) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::invalid("tunneling amplitudes must be finite and nonnegative"));
    }
    if t1 + t2 == 0.0 {
        return Err(Error::invalid("at least one tunneling amplitude must be nonzero"));
    }
    let amp = Complex64::new(t1, 0.0) + Complex64::from_polar(t2, 2.0 * PI * phi_ext);
    Ok((amp.norm_sqr() / (t1 + t2).powi(2)).clamp(0.0, 1.0))
}

/// Probability carried by the charge states the two-delta state of `parity`
/// forbids: Σn ≡ 2 (mod 4) for the ground state, Σn ≡ 0 (mod 4) for the
/// excited state.
pub fn prohibited_charge_weight(state: &[Complex64], basis: &ChargeBasis, parity: Parity) -> Result<f64> {
    if state.len() != basis.dim() {
        return Err(Error::invalid("state length does not match basis"));
    }
    let forbidden = match parity {
        Parity::Ground => 2,
        Parity::Excited => 0,
    };
    Ok(state
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let q = basis.charges(*i);
            (q[0] + q[1] + q[2]).rem_euclid(4) == forbidden
        })
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_values() {
        assert!(delta_wavefunction([1, 1, 0], Parity::Ground).abs() < 1e-15);
        assert_eq!(delta_wavefunction([0, 0, 0], Parity::Ground), 1.0);
        assert!((delta_wavefunction([1, 0, 0], Parity::Excited) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn interferometer_values() {
        assert!(interferometer_transmission(0.7, 0.7, 0.5).unwrap() < 1e-15);
        assert!((interferometer_transmission(0.2, 0.9, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((interferometer_transmission(1.0, 0.5, 0.5).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(interferometer_transmission(0.0, 0.0, 0.1).is_err());
        assert!(interferometer_transmission(-1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn delta_states_have_no_prohibited_weight() {
        let basis = ChargeBasis::rhombus(3).unwrap();
        for parity in [Parity::Ground, Parity::Excited] {
            let mut v: Vec<Complex64> = (0..basis.dim())
                .map(|i| Complex64::new(delta_wavefunction(basis.charges(i), parity), 0.0))
                .collect();
            let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= n);
            assert!(prohibited_charge_weight(&v, &basis, parity).unwrap() < 1e-30);
        }
    }
}
