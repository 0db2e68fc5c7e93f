//! Physical constants and unit conversions.
//!
//! Energies are carried as frequencies in GHz (E/h) everywhere in the crate.
//! Rates are in s⁻¹. Flux is in units of the flux quantum Φ0 = h/2e.

use std::f64::consts::PI;

/// Elementary charge (C), exact SI value.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s), exact SI value.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Boltzmann constant (J/K), exact SI value.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// One electronvolt in joules.
pub const ELECTRON_VOLT: f64 = ELEMENTARY_CHARGE;

/// e²/(2h) for a 1 fF capacitor, in GHz (≈ 19.370 GHz).
pub const EC_GHZ_PER_INVERSE_FF: f64 =
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * PLANCK * 1e-15) / 1e9;

/// k_B/h in GHz per kelvin (≈ 20.8366 GHz/K).
pub const KB_OVER_H_GHZ_PER_K: f64 = BOLTZMANN / PLANCK / 1e9;

/// Charging energy in GHz for a capacitance in fF.
pub fn charging_energy_ghz(c_ff: f64) -> f64 {
    EC_GHZ_PER_INVERSE_FF / c_ff
}

/// Angular frequency (rad/s) of a frequency given in GHz.
pub fn angular(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz * 1e9
}

/// ħω/(2k_BT) for a transition at `f_ghz` and temperature `temp_k`.
pub fn thermal_ratio(f_ghz: f64, temp_k: f64) -> f64 {
    f_ghz / (2.0 * KB_OVER_H_GHZ_PER_K * temp_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants_match_reference_values() {
        assert!((EC_GHZ_PER_INVERSE_FF - 19.370).abs() < 1e-3);
        assert!((KB_OVER_H_GHZ_PER_K - 20.836_619).abs() < 1e-5);
    }
}
