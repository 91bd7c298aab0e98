//! Experiment configuration: JSON schema, unit conversion and validation.
//!
//! Every dimensional field is an object `{"value": x, "unit": "..."}` (or
//! `{"values": [...], "unit": "..."}` for grids). Omitted physical parameters
//! take the reference values; unknown keys are rejected.

use ramanmag_core::constants::{frequency_from_wavelength, NANOMETRE};
use ramanmag_core::magnetometry::{default_detuning_grid, OFF_RESONANT_DETUNING};
use ramanmag_core::{CavitySystem, NVEnsemble, NVRates, OutputCoupling, PumpRule, RabiConvention};
use serde::{Deserialize, Serialize};

use crate::error::SweepError;
use crate::units::{to_si, Dimension, Quantity, QuantityList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    LaserCurve,
    Response,
    ThresholdShift,
    Sensitivity,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::LaserCurve => "laser_curve",
            SweepKind::Response => "response",
            SweepKind::ThresholdShift => "threshold_shift",
            SweepKind::Sensitivity => "sensitivity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpRuleName {
    MwOffThreshold,
    Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCavity {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist_radius: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refractive_index: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman_gain: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_frequency: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman_frequency: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_coupling: Option<OutputCoupling>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnsemble {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_section: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Quantity>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r31: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r42: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r35: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r45: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r51: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r52: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDrive {
    pub rabi: QuantityList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<QuantityList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<QuantityList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<RabiConvention>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPump {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<QuantityList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<PumpRuleName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<Quantity>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

/// The config file as written, before unit conversion and defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub sweep: SweepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<RawCavity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<RawEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RawRates>,
    pub drive: RawDrive,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_r: Option<QuantityList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<RawPump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_detuning: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<RawOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PumpSpec {
    /// Explicit pump powers (W), for laser curves.
    Grid(Vec<f64>),
    Rule(PumpRule),
}

/// Validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sweep: SweepKind,
    /// Cavity template; `loss_rate` is replaced by each entry of `kappa_r`.
    pub cavity: CavitySystem,
    pub rates: NVRates,
    pub rabi: Vec<f64>,
    pub detuning: Vec<f64>,
    pub dephasing: Vec<f64>,
    pub convention: RabiConvention,
    pub kappa_r: Vec<f64>,
    pub pump: Option<PumpSpec>,
    pub shift_detuning: f64,
    pub detection_efficiency: f64,
    pub output_dir: Option<String>,
    pub output_stem: String,
    pub workers: Option<usize>,
}

/// Parse and validate a JSON config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, SweepError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        SweepError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    ExperimentConfig::from_raw(&raw)
}

fn scalar(
    q: &Option<Quantity>,
    field: &str,
    dim: Dimension,
    default: f64,
) -> Result<f64, SweepError> {
    match q {
        None => Ok(default),
        Some(q) => {
            let v = to_si(q.value, &q.unit, dim).map_err(|m| SweepError::validation(field, m))?;
            if !v.is_finite() {
                return Err(SweepError::validation(field, "not finite"));
            }
            Ok(v)
        }
    }
}

fn list(q: &QuantityList, field: &str, dim: Dimension) -> Result<Vec<f64>, SweepError> {
    let raw: Vec<f64> = match (&q.value, &q.values) {
        (Some(v), None) => vec![*v],
        (None, Some(vs)) => vs.clone(),
        (Some(_), Some(_)) => {
            return Err(SweepError::validation(
                field,
                "give either `value` or `values`, not both",
            ))
        }
        (None, None) => Vec::new(),
    };
    if raw.is_empty() {
        return Err(SweepError::validation(field, "empty"));
    }
    raw.iter()
        .map(|&v| {
            let si = to_si(v, &q.unit, dim).map_err(|m| SweepError::validation(field, m))?;
            if si.is_finite() {
                Ok(si)
            } else {
                Err(SweepError::validation(field, "not finite"))
            }
        })
        .collect()
}

fn check<F: Fn(f64) -> bool>(
    values: &[f64],
    field: &str,
    ok: F,
    what: &str,
) -> Result<(), SweepError> {
    if values.iter().all(|v| ok(*v)) {
        Ok(())
    } else {
        Err(SweepError::validation(field, what))
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, SweepError> {
        let defaults = CavitySystem::default();
        let rc = raw.cavity.clone().unwrap_or_default();
        let re = raw.ensemble.clone().unwrap_or_default();
        let rr = raw.rates.clone().unwrap_or_default();
        let dr = NVRates::default();
        let de = NVEnsemble::default();

        let ensemble = NVEnsemble {
            cross_section: scalar(
                &re.cross_section,
                "ensemble.cross_section",
                Dimension::Area,
                de.cross_section,
            )?,
            density: scalar(
                &re.density,
                "ensemble.density",
                Dimension::Density,
                de.density,
            )?,
        };
        let cavity = CavitySystem {
            length: scalar(
                &rc.length,
                "cavity.length",
                Dimension::Length,
                defaults.length,
            )?,
            waist_radius: scalar(
                &rc.waist_radius,
                "cavity.waist_radius",
                Dimension::Length,
                defaults.waist_radius,
            )?,
            loss_rate: defaults.loss_rate,
            refractive_index: rc.refractive_index.unwrap_or(defaults.refractive_index),
            raman_gain: scalar(
                &rc.raman_gain,
                "cavity.raman_gain",
                Dimension::Gain,
                defaults.raman_gain,
            )?,
            pump_frequency: scalar(
                &rc.pump_frequency,
                "cavity.pump_frequency",
                Dimension::Optical,
                defaults.pump_frequency,
            )?,
            raman_frequency: scalar(
                &rc.raman_frequency,
                "cavity.raman_frequency",
                Dimension::Optical,
                defaults.raman_frequency,
            )?,
            ensemble,
            output_coupling: rc.output_coupling.unwrap_or_default(),
        };
        let rates = NVRates {
            r31: scalar(&rr.r31, "rates.r31", Dimension::Rate, dr.r31)?,
            r42: scalar(&rr.r42, "rates.r42", Dimension::Rate, dr.r42)?,
            r35: scalar(&rr.r35, "rates.r35", Dimension::Rate, dr.r35)?,
            r45: scalar(&rr.r45, "rates.r45", Dimension::Rate, dr.r45)?,
            r51: scalar(&rr.r51, "rates.r51", Dimension::Rate, dr.r51)?,
            r52: scalar(&rr.r52, "rates.r52", Dimension::Rate, dr.r52)?,
        };

        let rabi = list(&raw.drive.rabi, "drive.rabi", Dimension::Rate)?;
        let dephasing = match &raw.drive.dephasing {
            Some(q) => list(q, "drive.dephasing", Dimension::Rate)?,
            None => vec![1.0e6],
        };
        let detuning = match &raw.drive.detuning {
            Some(q) => list(q, "drive.detuning", Dimension::Rate)?,
            None => match raw.sweep {
                SweepKind::Response | SweepKind::Sensitivity => default_detuning_grid(),
                _ => vec![0.0],
            },
        };
        let kappa_r = match &raw.kappa_r {
            Some(q) => list(q, "kappa_r", Dimension::Rate)?,
            None => vec![defaults.loss_rate],
        };

        let pump = match &raw.pump {
            None => None,
            Some(p) => match (&p.grid, p.rule, &p.power) {
                (Some(g), None, None) => {
                    Some(PumpSpec::Grid(list(g, "pump.grid", Dimension::Power)?))
                }
                (None, Some(PumpRuleName::MwOffThreshold), None) => {
                    Some(PumpSpec::Rule(PumpRule::MwOffThreshold))
                }
                (None, Some(PumpRuleName::Fixed), Some(q)) => {
                    Some(PumpSpec::Rule(PumpRule::Fixed(scalar(
                        &Some(q.clone()),
                        "pump.power",
                        Dimension::Power,
                        0.0,
                    )?)))
                }
                (None, Some(PumpRuleName::Fixed), None) => {
                    return Err(SweepError::validation(
                        "pump.power",
                        "required for rule `fixed`",
                    ))
                }
                _ => {
                    return Err(SweepError::validation(
                        "pump",
                        "give either `grid`, or `rule` (with `power` for rule `fixed`)",
                    ))
                }
            },
        };

        let cfg = ExperimentConfig {
            sweep: raw.sweep,
            cavity,
            rates,
            rabi,
            detuning,
            dephasing,
            convention: raw.drive.convention.unwrap_or_default(),
            kappa_r,
            pump,
            shift_detuning: scalar(
                &raw.shift_detuning,
                "shift_detuning",
                Dimension::Rate,
                OFF_RESONANT_DETUNING,
            )?,
            detection_efficiency: raw.detection_efficiency.unwrap_or(1.0),
            output_dir: raw.output.as_ref().and_then(|o| o.dir.clone()),
            output_stem: raw
                .output
                .as_ref()
                .and_then(|o| o.stem.clone())
                .unwrap_or_else(|| raw.sweep.as_str().to_string()),
            workers: raw.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let core =
            |field: &str, e: ramanmag_core::Error| SweepError::validation(field, e.to_string());
        self.cavity.validate().map_err(|e| core("cavity", e))?;
        self.rates.validate().map_err(|e| core("rates", e))?;

        check(
            &self.rabi,
            "drive.rabi",
            |v| v >= 0.0,
            "must be non-negative",
        )?;
        check(
            &self.dephasing,
            "drive.dephasing",
            |v| v >= 0.0,
            "must be non-negative",
        )?;
        check(&self.kappa_r, "kappa_r", |v| v > 0.0, "must be positive")?;
        if !(self.shift_detuning > 0.0) {
            return Err(SweepError::validation("shift_detuning", "must be positive"));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(SweepError::validation(
                "detection_efficiency",
                "must be in (0, 1]",
            ));
        }
        if self.workers == Some(0) {
            return Err(SweepError::validation("workers", "must be at least 1"));
        }
        if self.output_stem.is_empty() || self.output_stem.contains(['/', '\\']) {
            return Err(SweepError::validation(
                "output.stem",
                "must be a plain file name",
            ));
        }

        match self.sweep {
            SweepKind::LaserCurve => match &self.pump {
                Some(PumpSpec::Grid(g)) => {
                    check(g, "pump.grid", |v| v >= 0.0, "must be non-negative")?;
                    if g.windows(2).any(|w| w[1] < w[0]) {
                        return Err(SweepError::validation("pump.grid", "must be ascending"));
                    }
                }
                _ => {
                    return Err(SweepError::validation(
                        "pump.grid",
                        "required for laser_curve sweeps",
                    ))
                }
            },
            SweepKind::Response | SweepKind::Sensitivity => {
                if let Some(PumpSpec::Grid(_)) = self.pump {
                    return Err(SweepError::validation(
                        "pump",
                        "use a pump `rule` for this sweep kind",
                    ));
                }
                if let Some(PumpSpec::Rule(PumpRule::Fixed(p))) = self.pump {
                    if !(p > 0.0) {
                        return Err(SweepError::validation("pump.power", "must be positive"));
                    }
                }
                if self.detuning.len() < 4 {
                    return Err(SweepError::validation(
                        "drive.detuning",
                        "need at least 4 points",
                    ));
                }
                if self.detuning.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(SweepError::validation(
                        "drive.detuning",
                        "must be strictly ascending",
                    ));
                }
                if self.sweep == SweepKind::Sensitivity {
                    check(
                        &self.rabi,
                        "drive.rabi",
                        |v| v > 0.0,
                        "must be positive for sensitivity sweeps",
                    )?;
                    if self.kappa_r.len() != 1 {
                        return Err(SweepError::validation(
                            "kappa_r",
                            "sensitivity sweeps take a single value",
                        ));
                    }
                }
            }
            SweepKind::ThresholdShift => {
                if self.pump.is_some() {
                    return Err(SweepError::validation(
                        "pump",
                        "not used by threshold_shift sweeps",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn pump_rule(&self) -> PumpRule {
        match self.pump {
            Some(PumpSpec::Rule(r)) => r,
            _ => PumpRule::MwOffThreshold,
        }
    }

    /// The fully explicit config in SI units.
    pub fn to_raw(&self) -> RawConfig {
        let q = Quantity::si;
        let c = &self.cavity;
        RawConfig {
            sweep: self.sweep,
            cavity: Some(RawCavity {
                length: Some(q(c.length, Dimension::Length)),
                waist_radius: Some(q(c.waist_radius, Dimension::Length)),
                refractive_index: Some(c.refractive_index),
                raman_gain: Some(q(c.raman_gain, Dimension::Gain)),
                pump_frequency: Some(q(c.pump_frequency, Dimension::Optical)),
                raman_frequency: Some(q(c.raman_frequency, Dimension::Optical)),
                output_coupling: Some(c.output_coupling),
            }),
            ensemble: Some(RawEnsemble {
                cross_section: Some(q(c.ensemble.cross_section, Dimension::Area)),
                density: Some(q(c.ensemble.density, Dimension::Density)),
            }),
            rates: Some(RawRates {
                r31: Some(q(self.rates.r31, Dimension::Rate)),
                r42: Some(q(self.rates.r42, Dimension::Rate)),
                r35: Some(q(self.rates.r35, Dimension::Rate)),
                r45: Some(q(self.rates.r45, Dimension::Rate)),
                r51: Some(q(self.rates.r51, Dimension::Rate)),
                r52: Some(q(self.rates.r52, Dimension::Rate)),
            }),
            drive: RawDrive {
                rabi: QuantityList::si(&self.rabi, Dimension::Rate),
                detuning: Some(QuantityList::si(&self.detuning, Dimension::Rate)),
                dephasing: Some(QuantityList::si(&self.dephasing, Dimension::Rate)),
                convention: Some(self.convention),
            },
            kappa_r: Some(QuantityList::si(&self.kappa_r, Dimension::Rate)),
            pump: self.pump.as_ref().map(|p| match p {
                PumpSpec::Grid(g) => RawPump {
                    grid: Some(QuantityList::si(g, Dimension::Power)),
                    ..RawPump::default()
                },
                PumpSpec::Rule(PumpRule::MwOffThreshold) => RawPump {
                    rule: Some(PumpRuleName::MwOffThreshold),
                    ..RawPump::default()
                },
                PumpSpec::Rule(PumpRule::Fixed(w)) => RawPump {
                    rule: Some(PumpRuleName::Fixed),
                    power: Some(q(*w, Dimension::Power)),
                    ..RawPump::default()
                },
            }),
            shift_detuning: Some(q(self.shift_detuning, Dimension::Rate)),
            detection_efficiency: Some(self.detection_efficiency),
            output: Some(RawOutput {
                dir: self.output_dir.clone(),
                stem: Some(self.output_stem.clone()),
            }),
            workers: self.workers,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("config serialises")
    }
}

/// Reference optical lines, for presets and docs.
pub fn reference_pump_frequency() -> f64 {
    frequency_from_wavelength(620.0 * NANOMETRE)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "sweep": "threshold_shift",
        "drive": {"rabi": {"values": [0, 18], "unit": "MHz"}},
        "kappa_r": {"value": 75, "unit": "MHz"}
    }"#;

    #[test]
    fn defaults_fill_rates_and_cavity() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.rates, NVRates::default());
        assert_eq!(cfg.rates.r31, 66.16e6);
        assert_eq!(cfg.cavity.pump_frequency, reference_pump_frequency());
        assert_eq!(cfg.kappa_r, vec![7.5e7]);
        assert_eq!(cfg.rabi, vec![0.0, 18e6]);
        assert_eq!(cfg.dephasing, vec![1e6]);
    }

    #[test]
    fn empty_rabi_grid_rejected() {
        let text = MINIMAL.replace("[0, 18]", "[]");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.to_string(), "drive.rabi: empty");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let text = MINIMAL.replace("\"sweep\"", "\"colour\": 1, \"sweep\"");
        match parse_config(&text).unwrap_err() {
            SweepError::Parse { message, line, .. } => {
                assert!(message.contains("unknown field"), "{message}");
                assert_eq!(line, 2);
            }
            e => panic!("unexpected {e}"),
        }
        let text = MINIMAL.replace("\"unit\": \"MHz\"}}", "\"unit\": \"MHz\", \"step\": 1}}");
        match parse_config(&text).unwrap_err() {
            SweepError::Parse { path, .. } => assert_eq!(path, "drive.rabi.step"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unit_mismatch_names_field() {
        let text = MINIMAL.replace(
            r#""kappa_r": {"value": 75, "unit": "MHz"}"#,
            r#""kappa_r": {"value": 75, "unit": "mW"}"#,
        );
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().starts_with("kappa_r:"), "{err}");
    }

    #[test]
    fn missing_unit_is_a_parse_error() {
        let text = MINIMAL.replace(r#", "unit": "MHz"}}"#, "}}");
        assert!(matches!(parse_config(&text), Err(SweepError::Parse { .. })));
    }

    #[test]
    fn laser_curve_needs_pump_grid() {
        let text = MINIMAL.replace("threshold_shift", "laser_curve");
        assert_eq!(
            parse_config(&text).unwrap_err().to_string(),
            "pump.grid: required for laser_curve sweeps"
        );
    }

    #[test]
    fn round_trip() {
        let text = r#"{
            "sweep": "sensitivity",
            "cavity": {"length": {"value": 120, "unit": "um"}, "pump_frequency": {"value": 615, "unit": "nm"}, "output_coupling": "single_mirror"},
            "ensemble": {"density": {"value": 1.5e18, "unit": "cm^-3"}},
            "rates": {"r45": {"value": 90, "unit": "us^-1"}},
            "drive": {"rabi": {"values": [2, 5, 8], "unit": "MHz"}, "dephasing": {"values": [0.1, 1], "unit": "MHz"}, "convention": "half_coupling"},
            "kappa_r": {"value": 110, "unit": "MHz"},
            "pump": {"rule": "fixed", "power": {"value": 350, "unit": "mW"}},
            "detection_efficiency": 0.8,
            "output": {"stem": "custom"},
            "workers": 3
        }"#;
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.pump, Some(PumpSpec::Rule(PumpRule::Fixed(0.35))));
    }
}
