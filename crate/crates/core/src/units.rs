//! Physical constants and unit conversions.
//!
//! Boundary values are given in nH, fF, GHz and flux quanta; everything
//! inside the solvers is SI.

use core::f64::consts::PI;

/// Planck constant (J s), exact.
pub const H: f64 = 6.626_070_15e-34;
/// Elementary charge (C), exact.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = H / (2.0 * PI);
/// Magnetic flux quantum h/2e (Wb).
pub const PHI0: f64 = H / (2.0 * E_CHARGE);
/// Boltzmann constant (J/K), exact.
pub const KB: f64 = 1.380_649e-23;

pub const NANO_HENRY: f64 = 1e-9;
pub const FEMTO_FARAD: f64 = 1e-15;
pub const ATTO_FARAD: f64 = 1e-18;
pub const GIGA_HERTZ: f64 = 1e9;

#[inline]
pub fn nh_to_h(l: f64) -> f64 {
    l * NANO_HENRY
}

#[inline]
pub fn ff_to_f(c: f64) -> f64 {
    c * FEMTO_FARAD
}

#[inline]
pub fn f_to_af(c: f64) -> f64 {
    c / ATTO_FARAD
}

/// Angular frequency (rad/s) to ordinary frequency in GHz.
#[inline]
pub fn omega_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * GIGA_HERTZ)
}

/// Energy expressed as E/h in GHz to joules.
#[inline]
pub fn ghz_to_joule(e: f64) -> f64 {
    e * GIGA_HERTZ * H
}

/// Inductive energy E_L = Phi0^2 / (4 pi^2 L), returned as E_L/h in GHz.
pub fn inductive_energy_ghz(l_nh: f64) -> f64 {
    PHI0 * PHI0 / (4.0 * PI * PI * nh_to_h(l_nh)) / H / GIGA_HERTZ
}
