//! Physical constants and unit conversions.

use serde::{Deserialize, Serialize};

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Inverse NV gyromagnetic ratio, 1/γ_e (T/Hz).
pub const INV_GAMMA_E: f64 = 5.68e-12;

pub const MHZ: f64 = 1.0e6;
pub const PER_MICROSECOND: f64 = 1.0e6;
pub const MICROMETRE: f64 = 1.0e-6;
pub const NANOMETRE: f64 = 1.0e-9;
pub const MILLIWATT: f64 = 1.0e-3;
pub const CM2: f64 = 1.0e-4;
pub const PER_CM3: f64 = 1.0e6;
pub const PER_CM: f64 = 100.0;
/// 1 cm/GW expressed in m/W.
pub const CM_PER_GW: f64 = 1.0e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub h: f64,
    pub c: f64,
    pub inv_gamma_e: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            h: PLANCK,
            c: SPEED_OF_LIGHT,
            inv_gamma_e: INV_GAMMA_E,
        }
    }
}

/// Optical frequency (Hz) for a vacuum wavelength (m).
pub fn frequency_from_wavelength(wavelength: f64) -> f64 {
    SPEED_OF_LIGHT / wavelength
}
