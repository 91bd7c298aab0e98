//! Steady-state model of an absorptive laser-threshold magnetometer.
//!
//! A diamond Raman laser is pumped at a wavelength absorbed by an ensemble of
//! microwave-driven NV centres in the same crystal. The NV ground-state
//! population, and therefore the pump absorption, depends on the microwave
//! detuning and hence on the external magnetic field. This crate provides:
//!
//! - [`nv_dynamics`]: the 5-level NV master equation, its steady state and a
//!   time integrator used as an independent check.
//! - [`raman_laser`]: the steady-state Raman laser with NV pump absorption,
//!   laser curves and threshold finding.
//! - [`magnetometry`]: output-vs-detuning response, shot-noise-limited DC
//!   sensitivity and operating-point optimisation.
//!
//! All internal quantities are SI. Frequencies and rates quoted in MHz are
//! taken as 10⁶ s⁻¹.

// NaN must fail these checks, so `!(x > y)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod magnetometry;
pub mod numerics;
pub mod nv_dynamics;
pub mod raman_laser;

pub use error::{Error, Result};
pub use magnetometry::{
    detuning_to_field, optimize_min_sensitivity, response_vs_detuning, sensitivity_curve,
    sensitivity_curve_with, threshold_shift_percent, PumpRule, ResponseCurve, SensitivityOptions,
    SensitivityResult, SensitivityTable,
};
pub use nv_dynamics::{
    absorption_coefficient, build_generator, ground_population, steady_state, time_evolve,
    DensityMatrixState, DriveField, MicrowaveDrive, NVEnsemble, NVRates, RabiConvention,
    StepControl,
};
pub use raman_laser::{
    beta_at_pump, finesse, laser_curve, output_power, pump_intensity_for_intracavity,
    pump_rate_from_intensity, threshold_pump, CavitySystem, LaserCurvePoint, OutputCoupling,
};
