//! Fixed physical constants (SI unless the name says otherwise).

use std::f64::consts::PI;

/// Speed of light in cm/s, so that `c · ν̃` with ν̃ in cm⁻¹ is a frequency in Hz.
pub const SPEED_OF_LIGHT_CM: f64 = 2.997_924_58e10;
/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

pub const PS: f64 = 1e-12;
pub const FS: f64 = 1e-15;

/// Angular frequency (rad/s) of a wavenumber given in cm⁻¹.
#[inline]
pub fn angular_frequency(wavenumber_cm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_CM * wavenumber_cm
}
