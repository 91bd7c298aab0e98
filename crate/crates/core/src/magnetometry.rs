//! Field response, shot-noise-limited DC sensitivity and operating-point
//! optimisation.
//!
//! The pump power is held fixed (by default at the microwave-off threshold)
//! and the laser output is tabulated against microwave detuning. Detuning
//! maps to field through B = Δ_g / γ_e. The sensitivity
//! η = √(h ν_r P) · |dB/dP| uses the slope of a monotone cubic interpolant
//! of the tabulated output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{INV_GAMMA_E, MHZ, PLANCK};
use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_section_min, Pchip};
use crate::nv_dynamics::{MicrowaveDrive, NVRates};
use crate::raman_laser::{laser_point, threshold_pump, CavitySystem};

/// Detuning used for the "off-resonant" threshold (s⁻¹).
pub const OFF_RESONANT_DETUNING: f64 = 200.0 * MHZ;
/// Detunings below this are excluded from the sensitivity minimisation.
pub const DEFAULT_GUARD: f64 = 0.1 * MHZ;
const SAMPLES_PER_INTERVAL: usize = 32;

/// Δ_g = 0 followed by 40 geometrically spaced points from 0.5 to 200 MHz.
pub fn default_detuning_grid() -> Vec<f64> {
    let (lo, hi, n) = (0.5 * MHZ, 200.0 * MHZ, 40);
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    std::iter::once(0.0)
        .chain((0..n).map(|i| if i == n - 1 { hi } else { lo * ratio.powi(i) }))
        .collect()
}

/// Magnetic field (T) corresponding to a detuning (Hz).
pub fn detuning_to_field(detuning: f64) -> f64 {
    detuning * INV_GAMMA_E
}

/// Laser output against detuning at a fixed pump power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub detunings: Vec<f64>,
    pub outputs: Vec<f64>,
    pub pump_power: f64,
    pub rabi: f64,
    pub dephasing: f64,
    pub loss_rate: f64,
    /// Stokes frequency ν_r, needed for the photon energy in η.
    pub raman_frequency: f64,
}

impl ResponseCurve {
    /// Monotone cubic interpolant of the output. A grid starting at Δ_g = 0
    /// is mirrored to negative detunings first, so the interpolant is even and
    /// flat at resonance.
    pub fn interpolant(&self) -> Result<Pchip> {
        if self.detunings.first() == Some(&0.0) {
            let n = self.detunings.len();
            let mut x = Vec::with_capacity(2 * n - 1);
            let mut y = Vec::with_capacity(2 * n - 1);
            for i in (1..n).rev() {
                x.push(-self.detunings[i]);
                y.push(self.outputs[i]);
            }
            x.extend_from_slice(&self.detunings);
            y.extend_from_slice(&self.outputs);
            Pchip::new(&x, &y)
        } else {
            Pchip::new(&self.detunings, &self.outputs)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.detunings.len() != self.outputs.len() {
            return Err(Error::invalid("outputs", "length differs from detunings"));
        }
        if self.detunings.len() < 4 {
            return Err(Error::invalid("detunings", "need at least 4 points"));
        }
        if self.detunings.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("detunings", "must be strictly ascending"));
        }
        if self.outputs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("outputs", "must be non-negative and finite"));
        }
        if !(self.raman_frequency > 0.0) {
            return Err(Error::invalid("raman_frequency", "must be positive"));
        }
        Ok(())
    }

    /// Full width at half maximum of the peak at the first grid point,
    /// assuming the response is even in Δ_g. `None` if the output never
    /// drops below half the peak on the grid.
    pub fn fwhm(&self) -> Option<f64> {
        let peak = *self.outputs.first()?;
        if !(peak > 0.0) {
            return None;
        }
        let half = 0.5 * peak;
        let k = self.outputs.iter().position(|&p| p < half)?;
        let interp = self.interpolant().ok()?;
        let x = bisect(
            |d| interp.eval(d) - half,
            self.detunings[k - 1],
            self.detunings[k],
            1e-12,
            200,
        )
        .ok()?;
        Some(2.0 * x.abs())
    }
}

/// Output versus detuning at fixed pump power. `drive.detuning` is ignored.
pub fn response_vs_detuning(
    sys: &CavitySystem,
    rates: &NVRates,
    drive: &MicrowaveDrive,
    pump_power: f64,
    detunings: &[f64],
) -> Result<ResponseCurve> {
    sys.validate()?;
    rates.validate()?;
    drive.validate()?;
    if !(pump_power > 0.0 && pump_power.is_finite()) {
        return Err(Error::invalid("pump_power", "must be positive"));
    }
    if detunings.len() < 4 || detunings.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "detunings",
            "need at least 4 strictly ascending points",
        ));
    }
    let outputs = detunings
        .iter()
        .map(|&d| {
            laser_point(sys, rates, &drive.with_detuning(d), pump_power).map(|p| p.output_power)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResponseCurve {
        detunings: detunings.to_vec(),
        outputs,
        pump_power,
        rabi: drive.rabi,
        dephasing: drive.dephasing,
        loss_rate: sys.loss_rate,
        raman_frequency: sys.raman_frequency,
    })
}

/// Threshold shift between Δ_g = 200 MHz and resonance, in percent of the
/// resonant threshold.
pub fn threshold_shift_percent(
    sys: &CavitySystem,
    rates: &NVRates,
    drive: &MicrowaveDrive,
) -> Result<f64> {
    let (resonant, detuned) = threshold_pair(sys, rates, drive, OFF_RESONANT_DETUNING)?;
    Ok(100.0 * (detuned - resonant) / resonant)
}

/// Resonant and detuned threshold pump powers (W).
pub fn threshold_pair(
    sys: &CavitySystem,
    rates: &NVRates,
    drive: &MicrowaveDrive,
    detuned: f64,
) -> Result<(f64, f64)> {
    let resonant = threshold_pump(sys, rates, &drive.with_detuning(0.0))?;
    let off = threshold_pump(sys, rates, &drive.with_detuning(detuned))?;
    Ok((resonant, off))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityOptions {
    /// Fraction of the output power that is detected.
    pub detection_efficiency: f64,
    /// Detunings in `[0, guard)` are excluded from the minimisation (s⁻¹).
    pub guard: f64,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self {
            detection_efficiency: 1.0,
            guard: DEFAULT_GUARD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub detuning: f64,
    pub output_power: f64,
    /// η at this detuning (T/√Hz); infinite where the slope vanishes.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    /// Minimum sensitivity η_DC (T/√Hz).
    pub eta_min: f64,
    pub detuning_opt: f64,
    pub field_opt: f64,
    /// η at each grid detuning outside the guard interval.
    pub curve: Vec<SensitivityPoint>,
}

struct SensitivityModel {
    interp: Pchip,
    photon_energy: f64,
    efficiency: f64,
}

impl SensitivityModel {
    fn eta(&self, detuning: f64) -> f64 {
        let power = self.interp.eval(detuning).max(0.0);
        let slope = self.interp.derivative(detuning).abs();
        if power <= 0.0 || slope == 0.0 {
            return f64::INFINITY;
        }
        let detected = self.efficiency * power;
        (self.photon_energy * detected).sqrt() * INV_GAMMA_E / (self.efficiency * slope)
    }
}

pub fn sensitivity_curve(curve: &ResponseCurve) -> Result<SensitivityResult> {
    sensitivity_curve_with(curve, &SensitivityOptions::default())
}

pub fn sensitivity_curve_with(
    curve: &ResponseCurve,
    opts: &SensitivityOptions,
) -> Result<SensitivityResult> {
    curve.validate()?;
    if !(opts.detection_efficiency > 0.0 && opts.detection_efficiency <= 1.0) {
        return Err(Error::invalid("detection_efficiency", "must be in (0, 1]"));
    }
    let model = SensitivityModel {
        interp: curve.interpolant()?,
        photon_energy: PLANCK * curve.raman_frequency,
        efficiency: opts.detection_efficiency,
    };

    let x = &curve.detunings;
    let lo = x[0].max(opts.guard);
    let hi = x[x.len() - 1];
    if !(hi > lo) {
        return Err(Error::invalid(
            "detunings",
            "grid ends inside the guard interval",
        ));
    }

    let peak = curve.outputs.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::DegenerateCurve(
            "output is zero at every detuning (below threshold)".into(),
        ));
    }
    let max_secant = curve
        .outputs
        .windows(2)
        .zip(x.windows(2))
        .map(|(p, d)| ((p[1] - p[0]) / (d[1] - d[0])).abs())
        .fold(0.0, f64::max);
    if max_secant * (hi - x[0]) <= 1e-12 * peak {
        return Err(Error::DegenerateCurve(
            "output does not vary with detuning".into(),
        ));
    }

    // Dense scan for the global minimum, then golden-section refinement
    // between the neighbouring samples.
    let mut samples = Vec::new();
    for w in x.windows(2) {
        let (a, b) = (w[0].max(lo), w[1]);
        if b <= lo {
            continue;
        }
        for j in 0..SAMPLES_PER_INTERVAL {
            samples.push(a + (b - a) * j as f64 / SAMPLES_PER_INTERVAL as f64);
        }
    }
    samples.push(hi);
    let etas: Vec<f64> = samples.iter().map(|&d| model.eta(d)).collect();
    let (best, best_eta) =
        etas.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc },
        );
    if !best_eta.is_finite() {
        return Err(Error::DegenerateCurve(
            "sensitivity is infinite everywhere".into(),
        ));
    }
    let a = samples[best.saturating_sub(1)];
    let b = samples[(best + 1).min(samples.len() - 1)];
    let (mut d_opt, mut eta_min) = golden_section_min(|d| model.eta(d), a, b, 1e-9 * hi);
    if !(eta_min <= best_eta) {
        d_opt = samples[best];
        eta_min = best_eta;
    }

    let points = x
        .iter()
        .zip(&curve.outputs)
        .filter(|(d, _)| **d >= lo)
        .map(|(&d, &p)| SensitivityPoint {
            detuning: d,
            output_power: p,
            eta: model.eta(d),
        })
        .collect();

    Ok(SensitivityResult {
        eta_min,
        detuning_opt: d_opt,
        field_opt: detuning_to_field(d_opt),
        curve: points,
    })
}

/// How the fixed pump power for a response curve is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "power")]
pub enum PumpRule {
    /// Threshold of the microwave-off laser curve.
    MwOffThreshold,
    /// A fixed pump power (W).
    Fixed(f64),
}

impl PumpRule {
    pub fn resolve(
        &self,
        sys: &CavitySystem,
        rates: &NVRates,
        drive: &MicrowaveDrive,
    ) -> Result<f64> {
        match *self {
            PumpRule::MwOffThreshold => {
                let off = MicrowaveDrive {
                    rabi: 0.0,
                    detuning: 0.0,
                    ..*drive
                };
                threshold_pump(sys, rates, &off)
            }
            PumpRule::Fixed(p) => Ok(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub rabi: f64,
    pub pump_power: f64,
    pub result: Option<SensitivityResult>,
    /// Why the point was skipped, if it was.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub dephasing: f64,
    pub rows: Vec<SensitivityRow>,
    /// Index into `rows` of the smallest η_min.
    pub best: Option<usize>,
}

impl SensitivityTable {
    pub fn best_row(&self) -> Option<&SensitivityRow> {
        self.best.map(|i| &self.rows[i])
    }
}

/// η_min as a function of Rabi frequency. `drive` supplies Γ_g and the
/// convention; its Rabi frequency and detuning are ignored. Grid points whose
/// response is below threshold at every detuning are kept but flagged.
pub fn optimize_min_sensitivity(
    sys: &CavitySystem,
    rates: &NVRates,
    drive: &MicrowaveDrive,
    rabi_grid: &[f64],
    pump_rule: PumpRule,
    detunings: &[f64],
    opts: &SensitivityOptions,
) -> Result<SensitivityTable> {
    if rabi_grid.is_empty() || rabi_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid(
            "rabi_grid",
            "must be non-empty and positive",
        ));
    }
    if rabi_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("rabi_grid", "must be strictly ascending"));
    }
    let rows = rabi_grid
        .par_iter()
        .map(|&rabi| -> Result<SensitivityRow> {
            let d = MicrowaveDrive { rabi, ..*drive };
            let pump_power = pump_rule.resolve(sys, rates, &d)?;
            let curve = response_vs_detuning(sys, rates, &d, pump_power, detunings)?;
            Ok(match sensitivity_curve_with(&curve, opts) {
                Ok(result) => SensitivityRow {
                    rabi,
                    pump_power,
                    result: Some(result),
                    skipped: None,
                },
                Err(Error::DegenerateCurve(why)) => SensitivityRow {
                    rabi,
                    pump_power,
                    result: None,
                    skipped: Some(why),
                },
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.result.as_ref().map(|s| (i, s.eta_min)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok(SensitivityTable {
        dephasing: drive.dephasing,
        rows,
        best,
    })
}
