//! Steady-state single-pass-pumped Raman laser with NV pump absorption.
//!
//! The pump depletes along the crystal through stimulated Raman scattering
//! and NV absorption β; the intracavity Stokes intensity I_r is taken as
//! uniform. Balancing single-pass Raman generation against the cavity loss
//! rate κ_r relates the incident pump intensity I⁰_p to I_r. β is evaluated
//! at the incident pump intensity, i.e. at the largest pump rate the NVs see.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{
    frequency_from_wavelength, CM_PER_GW, MHZ, MICROMETRE, NANOMETRE, PLANCK, SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::nv_dynamics::{
    absorption_coefficient, ground_population, steady_state, MicrowaveDrive, NVEnsemble, NVRates,
};

const PRESCAN_POINTS: usize = 400;
const PRESCAN_DECADES: f64 = 6.0;
const INTRACAVITY_REL_TOL: f64 = 1e-12;
const THRESHOLD_REL_TOL: f64 = 1e-12;
const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_MAX_ITER: usize = 500;

/// Which mirror transmissions count as the laser output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputCoupling {
    /// All of κ_r leaves as output (both mirrors).
    #[default]
    Total,
    /// One of two identical mirrors.
    SingleMirror,
}

impl OutputCoupling {
    pub fn fraction(self) -> f64 {
        match self {
            OutputCoupling::Total => 1.0,
            OutputCoupling::SingleMirror => 0.5,
        }
    }
}

/// Cavity, optical and material parameters (SI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySystem {
    /// Crystal (and cavity) length l_c (m).
    pub length: f64,
    /// Beam waist radius (m); the mode is treated as a cylinder.
    pub waist_radius: f64,
    /// Cavity loss rate κ_r (s⁻¹).
    pub loss_rate: f64,
    pub refractive_index: f64,
    /// Plane-wave Raman gain coefficient g_r (m/W).
    pub raman_gain: f64,
    pub pump_frequency: f64,
    pub raman_frequency: f64,
    pub ensemble: NVEnsemble,
    #[serde(default)]
    pub output_coupling: OutputCoupling,
}

impl Default for CavitySystem {
    fn default() -> Self {
        Self {
            length: 100.0 * MICROMETRE,
            waist_radius: 5.0 * MICROMETRE,
            loss_rate: 75.0 * MHZ,
            refractive_index: 2.4,
            raman_gain: 14.75 * CM_PER_GW,
            pump_frequency: frequency_from_wavelength(620.0 * NANOMETRE),
            raman_frequency: frequency_from_wavelength(676.0 * NANOMETRE),
            ensemble: NVEnsemble::default(),
            output_coupling: OutputCoupling::Total,
        }
    }
}

impl CavitySystem {
    pub fn with_loss_rate(mut self, loss_rate: f64) -> Self {
        self.loss_rate = loss_rate;
        self
    }

    pub fn beam_area(&self) -> f64 {
        PI * self.waist_radius * self.waist_radius
    }

    /// l_c / (c/n): single-pass transit time.
    fn transit_time(&self) -> f64 {
        self.length * self.refractive_index / SPEED_OF_LIGHT
    }

    fn photon_ratio(&self) -> f64 {
        self.pump_frequency / self.raman_frequency
    }

    /// Intensity scale n κ_r ν_r / (c g_r ν_p) used to bound the I_r search.
    pub fn characteristic_intensity(&self) -> f64 {
        self.refractive_index * self.loss_rate
            / (SPEED_OF_LIGHT * self.raman_gain * self.photon_ratio())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("waist_radius", self.waist_radius),
            ("loss_rate", self.loss_rate),
            ("refractive_index", self.refractive_index),
            ("raman_gain", self.raman_gain),
            ("pump_frequency", self.pump_frequency),
            ("raman_frequency", self.raman_frequency),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.pump_frequency > self.raman_frequency) {
            return Err(Error::invalid(
                "raman_frequency",
                "Stokes line must lie below the pump frequency",
            ));
        }
        self.ensemble.validate()
    }
}

/// One solved operating point of the laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserCurvePoint {
    /// Incident pump power P_p (W).
    pub pump_power: f64,
    /// Intracavity Stokes intensity I_r (W/m²).
    pub intracavity_intensity: f64,
    /// Output power (W).
    pub output_power: f64,
    /// Pump absorption coefficient β (m⁻¹).
    pub beta: f64,
    /// NV pump rate Λ_p (s⁻¹).
    pub pump_rate: f64,
}

/// Λ_p = σ I⁰_p / (h ν_p).
pub fn pump_rate_from_intensity(sys: &CavitySystem, pump_intensity: f64) -> f64 {
    sys.ensemble.cross_section * pump_intensity / (PLANCK * sys.pump_frequency)
}

/// Pump absorption β at incident intensity `pump_intensity` (W/m²).
///
/// At zero intensity the Λ_p → 0⁺ limit is used: no NV is excited, ρ_g = 1.
pub fn beta_at_pump(
    sys: &CavitySystem,
    rates: &NVRates,
    drive: &MicrowaveDrive,
    pump_intensity: f64,
) -> Result<f64> {
    if !(pump_intensity >= 0.0 && pump_intensity.is_finite()) {
        return Err(Error::invalid(
            "pump_intensity",
            "must be non-negative and finite",
        ));
    }
    if sys.ensemble.density == 0.0 {
        return Ok(0.0);
    }
    let pump_rate = pump_rate_from_intensity(sys, pump_intensity);
    let rho_g = if pump_rate == 0.0 {
        1.0
    } else {
        ground_population(&steady_state(rates, &drive.with_pump_rate(pump_rate))?)
    };
    Ok(absorption_coefficient(&sys.ensemble, rho_g))
}

/// (1 − e^{−l x}) / x, continuous through x = 0.
fn single_pass_fraction(length: f64, x: f64) -> f64 {
    let lx = length * x;
    if lx.abs() < 1e-8 {
        length * (1.0 - 0.5 * lx)
    } else {
        -(-lx).exp_m1() / x
    }
}

/// Total single-pass extinction rate of the pump, (ν_p/ν_r) g_r I_r + β.
fn pump_extinction(sys: &CavitySystem, intracavity: f64, beta: f64) -> f64 {
    sys.photon_ratio() * sys.raman_gain * intracavity + beta
}

/// Incident pump intensity sustaining intracavity intensity `intracavity`
/// at steady state, for absorption `beta`.
pub fn pump_intensity_for_intracavity(sys: &CavitySystem, intracavity: f64, beta: f64) -> f64 {
    let x = pump_extinction(sys, intracavity, beta);
    sys.transit_time() * sys.loss_rate / (sys.raman_gain * single_pass_fraction(sys.length, x))
}

/// Pump intensity lost in one pass, ΔI_p.
pub fn pump_depletion(sys: &CavitySystem, pump_intensity: f64, intracavity: f64, beta: f64) -> f64 {
    let x = pump_extinction(sys, intracavity, beta);
    -pump_intensity * (-sys.length * x).exp_m1()
}

/// Stokes intensity generated in one pass, ΔI_r: the Raman share of ΔI_p.
pub fn single_pass_raman_gain(
    sys: &CavitySystem,
    pump_intensity: f64,
    intracavity: f64,
    beta: f64,
) -> f64 {
    let x = pump_extinction(sys, intracavity, beta);
    sys.raman_gain * intracavity * pump_intensity * single_pass_fraction(sys.length, x)
}

/// dI_r/dt of the cavity rate equation.
pub fn intracavity_rate(
    sys: &CavitySystem,
    pump_intensity: f64,
    intracavity: f64,
    beta: f64,
) -> f64 {
    single_pass_raman_gain(sys, pump_intensity, intracavity, beta) / sys.transit_time()
        - sys.loss_rate * intracavity
}

/// Laser output power for intracavity intensity `intracavity`.
pub fn output_power(sys: &CavitySystem, intracavity: f64) -> f64 {
    sys.transit_time()
        * sys.loss_rate
        * intracavity
        * sys.beam_area()
        * sys.output_coupling.fraction()
}

/// Free spectral range over linewidth, (c / 2 n l_c) / (κ_r / 2π).
pub fn finesse(sys: &CavitySystem) -> f64 {
    let fsr = SPEED_OF_LIGHT / (2.0 * sys.refractive_index * sys.length);
    fsr / (sys.loss_rate / (2.0 * PI))
}

/// Rough circulating power for a given output power: P_out · F / π.
pub fn intracavity_power_estimate(sys: &CavitySystem, output: f64) -> f64 {
    output * finesse(sys) / PI
}

/// Steady-state I_r for incident intensity `pump_intensity` and fixed β.
/// Returns 0 at or below threshold.
pub fn solve_intracavity(sys: &CavitySystem, pump_intensity: f64, beta: f64) -> Result<f64> {
    let residual = |ir: f64| pump_intensity_for_intracavity(sys, ir, beta) - pump_intensity;
    if residual(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let scale = sys.characteristic_intensity();
    let lo_exp = -PRESCAN_DECADES;
    let step = 2.0 * PRESCAN_DECADES / (PRESCAN_POINTS - 1) as f64;
    let mut lower = 0.0;
    for i in 0..PRESCAN_POINTS {
        let ir = scale * 10f64.powf(lo_exp + step * i as f64);
        if residual(ir) > 0.0 {
            return bisect(residual, lower, ir, INTRACAVITY_REL_TOL, 2000);
        }
        lower = ir;
    }
    Err(Error::NoConvergence(format!(
        "intracavity intensity above search bound {:e} W/m²",
        lower
    )))
}

pub fn laser_point(
    sys: &CavitySystem,
    rates: &NVRates,
    drive: &MicrowaveDrive,
    pump_power: f64,
) -> Result<LaserCurvePoint> {
    if !(pump_power >= 0.0 && pump_power.is_finite()) {
        return Err(Error::invalid(
            "pump_power",
            "must be non-negative and finite",
        ));
    }
    let intensity = pump_power / sys.beam_area();
    let beta = beta_at_pump(sys, rates, drive, intensity)?;
    let intracavity = if pump_power == 0.0 {
        0.0
    } else {
        solve_intracavity(sys, intensity, beta)?
    };
    Ok(LaserCurvePoint {
        pump_power,
        intracavity_intensity: intracavity,
        output_power: output_power(sys, intracavity),
        beta,
        pump_rate: pump_rate_from_intensity(sys, intensity),
    })
}

/// Output versus pump power over an ascending grid of pump powers (W).
pub fn laser_curve(
    sys: &CavitySystem,
    rates: &NVRates,
    drive: &MicrowaveDrive,
    pump_powers: &[f64],
) -> Result<Vec<LaserCurvePoint>> {
    sys.validate()?;
    rates.validate()?;
    drive.validate()?;
    if pump_powers.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::invalid(
            "pump_powers",
            "must be non-negative and finite",
        ));
    }
    if pump_powers.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("pump_powers", "must be ascending"));
    }
    pump_powers
        .iter()
        .map(|&p| laser_point(sys, rates, drive, p))
        .collect()
}

/// Threshold pump power (W): the self-consistent P where the I_r → 0 limit
/// of the steady-state relation holds with β evaluated at P.
pub fn threshold_pump(sys: &CavitySystem, rates: &NVRates, drive: &MicrowaveDrive) -> Result<f64> {
    sys.validate()?;
    rates.validate()?;
    drive.validate()?;
    let area = sys.beam_area();
    let required = |p: f64| -> Result<f64> {
        let beta = beta_at_pump(sys, rates, drive, p / area)?;
        Ok(area * pump_intensity_for_intracavity(sys, 0.0, beta))
    };

    // required(P) decreases with P (saturation lowers β) and is bounded by
    // its values at β = 0 and β = σD, so the fixed point is unique.
    let floor = area * pump_intensity_for_intracavity(sys, 0.0, 0.0);
    let ceiling = required(0.0)?;
    if ceiling - floor <= THRESHOLD_REL_TOL * floor {
        return Ok(ceiling);
    }

    let mut p = required(floor)?;
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = required(p)?;
        let delta = next - p;
        if delta.abs() <= 1e-10 * p {
            converged = true;
            break;
        }
        p += FIXED_POINT_DAMPING * delta;
    }

    let mut failure = None;
    let mut residual = |q: f64| match required(q) {
        Ok(r) => q - r,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let (lo, hi) = if converged {
        let (lo, hi) = (p * (1.0 - 1e-8), p * (1.0 + 1e-8));
        if residual(lo) <= 0.0 && residual(hi) >= 0.0 {
            (lo, hi)
        } else {
            (floor, ceiling)
        }
    } else {
        (floor, ceiling)
    };
    let root = bisect(&mut residual, lo, hi, THRESHOLD_REL_TOL, 500);
    if let Some(e) = failure {
        return Err(e);
    }
    root
}
