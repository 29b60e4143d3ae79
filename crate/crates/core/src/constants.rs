//! Physical constants (CODATA 2018) and unit helpers.
//!
//! Every angular frequency in this crate is in rad/s; these helpers are the
//! only place where Hz-valued inputs are converted.

use core::f64::consts::PI;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Mass of a ⁹Be⁺ ion in amu (atomic mass less one electron).
pub const BE9_ION_MASS_AMU: f64 = 9.012_183_1 - 5.485_799_09e-4;
/// Natural linewidth of the Be⁺ 2P3/2 level, Hz.
pub const BE9_LINEWIDTH_HZ: f64 = 19.4e6;
/// Wavelength of the Be⁺ Raman and pumping light, m.
pub const BE9_RAMAN_WAVELENGTH: f64 = 313e-9;
/// Mass of an H₂ molecule in amu.
pub const H2_MASS_AMU: f64 = 2.015_88;

/// Converts a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn khz(f: f64) -> f64 {
    hz(f * 1e3)
}

#[inline]
pub fn mhz(f: f64) -> f64 {
    hz(f * 1e6)
}

/// Converts an angular frequency in rad/s back to Hz.
#[inline]
pub fn to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[inline]
pub fn micros(t: f64) -> f64 {
    t * 1e-6
}
