//! K0 with a large-argument guard against underflow of e^{−x}.

use puruspe::Kn;

/// Above this argument K0 is evaluated from its asymptotic series.
const ASYMPTOTIC_FROM: f64 = 500.0;

/// e^x K0(x) from the asymptotic expansion √(π/2x) Σ (−1)^k ((2k−1)!!)² / (k! (8x)^k).
fn scaled_k0_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        let odd = (2 * k - 1) as f64;
        term *= -odd * odd / (k as f64 * 8.0 * x);
        sum += term;
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * sum
}

/// Modified Bessel function of the second kind, order zero (x > 0).
pub fn k0(x: f64) -> f64 {
    if x >= ASYMPTOTIC_FROM {
        scaled_k0_asymptotic(x) * (-x).exp()
    } else {
        Kn(0, x)
    }
}

/// K0(x)·cosh(x), finite for every x > 0.
pub fn k0_cosh(x: f64) -> f64 {
    if x >= ASYMPTOTIC_FROM {
        0.5 * scaled_k0_asymptotic(x) * (1.0 + (-2.0 * x).exp())
    } else {
        Kn(0, x) * x.cosh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// K0(x) = ∫_0^∞ e^{−x cosh t} dt by the trapezoid rule (exponentially
    /// convergent for this integrand).
    fn k0_quadrature(x: f64) -> f64 {
        let h: f64 = 1e-3;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let f = (-x * t.cosh()).exp();
            sum += f;
            if f < 1e-300 || t > 50.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    #[test]
    fn matches_integral_representation() {
        for x in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 80.0] {
            let (a, b) = (k0(x), k0_quadrature(x));
            assert!((a - b).abs() < 1e-7 * b, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn asymptotic_branch_is_continuous() {
        let x = ASYMPTOTIC_FROM;
        let below = Kn(0, x - 1e-9) * (x - 1e-9).cosh();
        assert!((k0_cosh(x) - below).abs() < 1e-10 * below);
        assert!(k0_cosh(5000.0).is_finite() && k0_cosh(5000.0) > 0.0);
    }

    #[test]
    fn k0_cosh_increases_towards_small_argument() {
        let xs: Vec<f64> = (1..200).map(|i| 0.05 * i as f64).collect();
        assert!(xs.windows(2).all(|w| k0_cosh(w[0]) > k0_cosh(w[1])));
    }
}
